"""Session protocol: trial plan, moves, questions, payment, export."""

import pytest

from marblelab.games import Player
from marblelab.session import (
    EXPORT_COLUMNS,
    Group,
    Phase,
    SessionConfig,
    SessionError,
    build_session,
    compute_payment,
    events_to_jsonl,
    export_records,
    format_euros,
    replay_events,
    rows_to_csv,
    validate_export_rows,
)


def make_config(**overrides):
    defaults = dict(participant_id="T01", group=Group.A, seed=5)
    defaults.update(overrides)
    return SessionConfig(**defaults)


def drive_full_session(state, p_rule=None, answer="left"):
    """Play a session to completion; P picks via p_rule(game, node) or the
    first action."""
    t = 1_000
    while state.phase is not Phase.FINISHED:
        index = state.trial_index
        state.start_trial(t)
        t += 250
        state.advance_computer(t)
        t += 250
        while state.phase is not Phase.FINISHED and state.trial_index == index:
            if state.pending_question:
                state.answer_question(answer, t)
                t += 150
                state.advance_computer(t)
            elif state.turn is Player.P:
                game = state.all_games[state.current_trial().game_id]
                labels = game.decision(state.marble_at).action_labels()
                label = p_rule(game, state.marble_at) if p_rule else labels[0]
                state.apply_move(Player.P, label, t)
                t += 200
                state.advance_computer(t)
            else:
                raise AssertionError("stalled")
        t += 100
    return state


class TestTrialPlan:
    def test_62_trials_by_default(self):
        state = build_session(make_config())
        assert len(state.trials) == 62
        practice = [t for t in state.trials if t.phase is Phase.PRACTICE]
        experimental = [t for t in state.trials if t.phase is Phase.EXPERIMENTAL]
        assert len(practice) == 14 and len(experimental) == 48

    def test_practice_difficulty_is_non_decreasing(self):
        state = build_session(make_config())
        sizes = [
            len(state.all_games[t.game_id].decision_ids)
            for t in state.trials
            if t.phase is Phase.PRACTICE
        ]
        assert sizes == sorted(sizes)
        assert sizes[0] == 1 and sizes[-1] == 4

    def test_same_game_order_every_round(self):
        state = build_session(make_config())
        rounds = {}
        for t in state.trials:
            if t.phase is Phase.EXPERIMENTAL:
                rounds.setdefault(t.round_no, []).append(t.game_id)
        assert len(rounds) == 8
        orders = {tuple(v) for v in rounds.values()}
        assert orders == {tuple(state.config.game_order)}

    def test_group_a_prompts(self):
        state = build_session(make_config(group=Group.A))
        flagged = [t for t in state.trials if t.ask_question]
        assert len(flagged) == 24
        assert {t.round_no for t in flagged} == {3, 4, 7, 8}

    def test_group_b_prompts(self):
        state = build_session(make_config(group=Group.B))
        flagged = [t for t in state.trials if t.ask_question]
        assert len(flagged) == 12
        assert {t.round_no for t in flagged} == {7, 8}

    def test_degenerate_config(self):
        state = build_session(make_config(group=Group.B, rounds=1, practice_count=0))
        assert len(state.trials) == 6
        assert not any(t.ask_question for t in state.trials)

    def test_variants_pairwise_distinct_per_game(self):
        state = build_session(make_config())
        for gid in state.config.game_order:
            keys = {
                t.variant.key()
                for t in state.trials
                if t.phase is Phase.EXPERIMENTAL and t.game_id == gid
            }
            assert len(keys) == 8

    def test_plan_is_pure_function_of_config(self):
        a = build_session(make_config())
        b = build_session(make_config())
        assert a.trials == b.trials


class TestMoves:
    def test_computer_fold_skips_first_choice(self):
        state = build_session(make_config(practice_count=0, seed=12))
        # find a trial whose schedule folds at the root
        while True:
            trial = state.current_trial()
            game = state.all_games[trial.game_id]
            root_owner = game.decision(game.root).owner
            plan_root = (
                trial.plan_c.action_at(game, game.root)
                if root_owner is Player.C
                else None
            )
            if plan_root == "a":
                break
            drive_trial = state.trial_index
            state.start_trial(10)
            state.advance_computer(20)
            while state.trial_index == drive_trial and state.phase is not Phase.FINISHED:
                if state.pending_question:
                    state.answer_question("undecided", 30)
                    state.advance_computer(35)
                elif state.turn is Player.P:
                    labels = game.decision(state.marble_at).action_labels()
                    state.apply_move(Player.P, labels[0], 40)
                    state.advance_computer(50)
        state.start_trial(100)
        state.advance_computer(150)
        record = state.records[-1]
        assert record.first_choice is None and record.second_choice is None
        assert record.t_start_ms is not None
        assert record.t_first_ms is None

    def test_full_path_credits_marbles(self):
        state = build_session(
            make_config(practice_count=0, group=Group.B, seed=3)
        )
        # play until we find a game3 trial where C opens with b
        while True:
            trial = state.current_trial()
            game = state.all_games[trial.game_id]
            if (
                trial.game_id == "game3"
                and trial.plan_c.action_at(game, "n0") == "b"
                and trial.plan_c.action_at(game, "n2") == "f"
            ):
                break
            index = state.trial_index
            state.start_trial(10)
            state.advance_computer(20)
            while state.trial_index == index and state.phase is not Phase.FINISHED:
                if state.pending_question:
                    state.answer_question("undecided", 25)
                    state.advance_computer(28)
                elif state.turn is Player.P:
                    labels = game.decision(state.marble_at).action_labels()
                    state.apply_move(Player.P, labels[0], 30)
                    state.advance_computer(40)
        before = state.marbles
        state.start_trial(100)
        state.advance_computer(150)
        state.apply_move(Player.P, "d", 200)
        state.advance_computer(250)
        state.apply_move(Player.P, "h", 300)
        record = state.records[-1]
        assert record.first_choice == "d" and record.second_choice == "h"
        assert record.marbles_won == 4
        assert state.marbles == before + 4

    def test_out_of_turn_move_rejected(self):
        state = build_session(make_config(practice_count=0))
        state.start_trial(10)
        game = state.all_games[state.current_trial().game_id]
        if state.turn is Player.C:
            with pytest.raises(SessionError, match="turn"):
                state.apply_move(Player.P, "c", 20)
        else:
            with pytest.raises(SessionError, match="turn"):
                state.apply_move(Player.C, "a", 20)

    def test_computer_must_follow_plan(self):
        state = build_session(make_config(practice_count=0, seed=12))
        state.start_trial(10)
        trial = state.current_trial()
        game = state.all_games[trial.game_id]
        if state.turn is Player.C:
            prescribed = trial.plan_c.action_at(game, state.marble_at)
            labels = game.decision(state.marble_at).action_labels()
            wrong = next(l for l in labels if l != prescribed)
            with pytest.raises(SessionError, match="plan"):
                state.apply_move(Player.C, wrong, 20)

    def test_illegal_action_rejected(self):
        state = build_session(make_config(practice_count=0))
        state.start_trial(10)
        state.advance_computer(15)
        if state.turn is Player.P:
            with pytest.raises(SessionError, match="illegal"):
                state.apply_move(Player.P, "z", 20)

    def test_move_before_start_rejected(self):
        state = build_session(make_config())
        with pytest.raises(SessionError, match="started"):
            state.apply_move(Player.P, "c", 5)


class TestQuestions:
    def test_answer_without_prompt_rejected(self):
        state = build_session(make_config())
        with pytest.raises(SessionError, match="pending"):
            state.answer_question("left", 10)

    def test_left_maps_to_e_under_normal_orientation(self):
        state = build_session(make_config(group=Group.A, practice_count=0))
        # walk to a flagged round-3 trial and answer
        drive_full = False
        t = 100
        while not drive_full:
            trial = state.current_trial()
            game = state.all_games[trial.game_id]
            state.start_trial(t)
            t += 50
            state.advance_computer(t)
            if trial.ask_question and state.turn is Player.P:
                first = game.owned_by(Player.P)[0]
                if state.marble_at == first:
                    labels = game.decision(first).action_labels()
                    state.apply_move(Player.P, labels[0], t)
                    assert state.pending_question
                    target = state.next_computer_node(game)
                    mirrored = trial.variant.mirrored(target)
                    state.answer_question("left", t + 10)
                    record = state.current_record or state.records[-1]
                    expected = "f" if mirrored else "e"
                    answer = (
                        state.records[-1].question_answer
                        if state.records and state.records[-1].question_answer
                        else record.question_answer
                    )
                    assert answer == expected
                    drive_full = True
                    continue
            # otherwise finish the trial quickly
            index = state.trial_index
            while state.trial_index == index and state.phase is not Phase.FINISHED:
                if state.pending_question:
                    state.answer_question("undecided", t)
                    state.advance_computer(t)
                elif state.turn is Player.P:
                    labels = game.decision(state.marble_at).action_labels()
                    state.apply_move(Player.P, labels[0], t)
                    state.advance_computer(t)
                t += 20

    def test_undecided_stored_verbatim(self):
        state = build_session(make_config(group=Group.A, practice_count=0))
        t = 100
        answered = False
        while not answered and state.phase is not Phase.FINISHED:
            index = state.trial_index
            state.start_trial(t)
            t += 30
            state.advance_computer(t)
            while state.trial_index == index and state.phase is not Phase.FINISHED:
                if state.pending_question:
                    state.answer_question("undecided", t)
                    state.advance_computer(t)
                    answered = True
                elif state.turn is Player.P:
                    game = state.all_games[state.current_trial().game_id]
                    labels = game.decision(state.marble_at).action_labels()
                    state.apply_move(Player.P, labels[0], t)
                    state.advance_computer(t)
                t += 20
        assert any(r.question_answer == "undecided" for r in state.records)


class TestLifecycle:
    def test_break_after_24_experimental_trials(self):
        state = build_session(make_config(group=Group.B, practice_count=0))
        hits = []

        t = 100
        while state.phase is not Phase.FINISHED:
            if state.phase is Phase.BREAK:
                hits.append(len(state.records))
            index = state.trial_index
            state.start_trial(t)
            t += 30
            state.advance_computer(t)
            while state.trial_index == index and state.phase is not Phase.FINISHED:
                if state.pending_question:
                    state.answer_question("undecided", t)
                    state.advance_computer(t)
                elif state.turn is Player.P:
                    game = state.all_games[state.current_trial().game_id]
                    labels = game.decision(state.marble_at).action_labels()
                    state.apply_move(Player.P, labels[0], t)
                    state.advance_computer(t)
                t += 20
        assert hits == [24]

    def test_marbles_reset_between_phases(self):
        state = drive_full_session(build_session(make_config(seed=21)))
        assert state.practice_marbles > 0
        total_experimental = sum(r.marbles_won for r in state.records)
        assert state.marbles == total_experimental

    def test_payment_examples(self):
        assert compute_payment(0) == 1000
        assert format_euros(compute_payment(0)) == "€10.00"
        assert compute_payment(37) == 1150
        assert format_euros(compute_payment(37)) == "€11.50"
        assert compute_payment(100) == 1400
        assert format_euros(compute_payment(100)) == "€14.00"
        assert compute_payment(1) == 1005  # 1004 rounds up to the 5-mark
        assert compute_payment(3) == 1010  # 1012 rounds down

    def test_payment_monotone(self):
        values = [compute_payment(m) for m in range(0, 200)]
        assert values == sorted(values)


class TestExportAndReplay:
    def test_export_blocked_until_finished(self):
        state = build_session(make_config())
        with pytest.raises(SessionError):
            export_records(state)
        assert export_records(state, allow_partial=True) == []

    def test_export_schema(self):
        state = drive_full_session(build_session(make_config(seed=9)))
        rows = export_records(state)
        assert len(rows) == 48
        validate_export_rows(rows)
        csv_text = rows_to_csv(rows)
        assert csv_text.splitlines()[0] == ",".join(EXPORT_COLUMNS)
        assert len(csv_text.splitlines()) == 49

    def test_question_columns_only_in_question_rounds(self):
        state = drive_full_session(build_session(make_config(group=Group.B, seed=9)))
        for row in export_records(state):
            if row["round"] in (7, 8) and row["first_choice"]:
                assert row["question_answer"] is not None
            if row["round"] not in (7, 8):
                assert row["question_answer"] is None
                assert row["t_question_ms"] is None

    def test_timings_nonnegative(self):
        state = drive_full_session(build_session(make_config(seed=2)))
        for row in export_records(state):
            for col in ("t_start_ms", "t_first_ms", "t_second_ms", "t_question_ms"):
                if row[col] is not None:
                    assert row[col] >= 0

    def test_replay_reproduces_state(self):
        state = drive_full_session(build_session(make_config(seed=31)))
        log = events_to_jsonl(state.events)
        again = replay_events(log.splitlines())
        assert export_records(again) == export_records(state)
        assert again.marbles == state.marbles
        assert again.phase is Phase.FINISHED

// View payloads exactly as the session service emits them.
// The client renders these verbatim and never computes game logic.

export type PlayerId = 'C' | 'P';

export interface ActionRef {
  label: string;
  child: string;
}

export interface DecisionNodeView {
  kind: 'decision';
  owner: PlayerId;
  mirrored: boolean;
  left: ActionRef;
  right: ActionRef;
}

export interface LeafNodeView {
  kind: 'leaf';
  orange: number; // participant marbles in the bin
  blue: number; // computer marbles in the bin
}

export type NodeView = DecisionNodeView | LeafNodeView;

export interface TreeView {
  root: string;
  nodes: Record<string, NodeView>;
}

export interface Totals {
  participant: number;
  computer: number;
  practice_participant: number;
}

export interface TrialView {
  participant: string;
  group: 'A' | 'B';
  phase: 'practice' | 'experimental' | 'break' | 'finished';
  trial_index: number;
  trial_count: number;
  game_id: string | null;
  round: number | null;
  practice: boolean;
  started: boolean;
  done: boolean;
  session_finished: boolean;
  turn: PlayerId | null;
  marble_at: string | null;
  pending_question: boolean;
  totals: Totals;
  last_gain: number | null;
  tree: TreeView | null;
  legal_actions: string[];
  question?: { options: string[] };
}

export type QuestionChoice = 'left' | 'right' | 'undecided';

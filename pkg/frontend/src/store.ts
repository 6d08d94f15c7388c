// UI store: the last fetched view plus in-flight bookkeeping.  The
// store is deliberately stateless beyond that view, so reloading the
// page and re-fetching reproduces the exact same screen.

import { SessionApi } from './api.js';
import type { QuestionChoice, TrialView } from './types.js';

export type StoreListener = (view: TrialView) => void;

export class SessionStore {
  view: TrialView | null = null;
  busy = false;
  private listeners: StoreListener[] = [];

  constructor(
    private api: SessionApi,
    private clock: () => number = () => Date.now(),
  ) {}

  subscribe(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private publish(view: TrialView): TrialView {
    this.view = view;
    for (const listener of this.listeners) listener(view);
    return view;
  }

  async refresh(): Promise<TrialView> {
    return this.publish(await this.api.getState());
  }

  /** Legal right now for the participant to click this trapdoor label? */
  canClick(label: string): boolean {
    return !this.busy && !!this.view && this.view.legal_actions.includes(label);
  }

  async startTrial(): Promise<TrialView> {
    return this.guarded(() => this.api.startTrial(this.clock()));
  }

  /** Trapdoor click; silently ignored when the click is not legal. */
  async clickTrapdoor(label: string): Promise<TrialView | null> {
    if (!this.canClick(label)) return null;
    return this.guarded(() => this.api.move(label, this.clock()));
  }

  async answerQuestion(choice: QuestionChoice): Promise<TrialView> {
    return this.guarded(() => this.api.answer(choice, this.clock()));
  }

  private async guarded(call: () => Promise<TrialView>): Promise<TrialView> {
    if (this.busy) throw new Error('request already in flight');
    this.busy = true;
    try {
      return this.publish(await call());
    } catch (err) {
      // a rejected action means the client drifted; re-sync from the server
      this.busy = false;
      await this.refresh();
      throw err;
    } finally {
      this.busy = false;
    }
  }
}

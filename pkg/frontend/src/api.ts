// Thin typed client for the session service.  Every mutating call
// carries the client-captured click timestamp; the server is the only
// authority on legality, payoffs and the computer's moves.

import type { QuestionChoice, TrialView } from './types.js';

export interface SessionOptions {
  group: 'A' | 'B';
  seed: number;
  participant_id?: string;
  deviation_rate?: number;
  rounds?: number;
  practice_count?: number;
  t_ms?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { 'content-type': 'application/json' },
    ...init,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class SessionApi {
  constructor(
    private baseUrl: string,
    public sessionId: string,
  ) {}

  static async create(baseUrl: string, options: SessionOptions): Promise<SessionApi> {
    const body = await request<{ session_id: string }>(`${baseUrl}/sessions`, {
      method: 'POST',
      body: JSON.stringify(options),
    });
    return new SessionApi(baseUrl, body.session_id);
  }

  private url(suffix: string): string {
    return `${this.baseUrl}/sessions/${this.sessionId}${suffix}`;
  }

  getState(): Promise<TrialView> {
    return request<TrialView>(this.url('/state'));
  }

  startTrial(tMs: number): Promise<TrialView> {
    return request<TrialView>(this.url('/start'), {
      method: 'POST',
      body: JSON.stringify({ t_ms: tMs }),
    });
  }

  move(action: string, tMs: number): Promise<TrialView> {
    return request<TrialView>(this.url('/move'), {
      method: 'POST',
      body: JSON.stringify({ action, t_ms: tMs }),
    });
  }

  answer(choice: QuestionChoice, tMs: number): Promise<TrialView> {
    return request<TrialView>(this.url('/answer'), {
      method: 'POST',
      body: JSON.stringify({ choice, t_ms: tMs }),
    });
  }

  async exportCsv(partial = false): Promise<string> {
    const resp = await fetch(this.url(`/export?partial=${partial}`));
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.text();
  }
}

// Browser wiring: mount the scene, forward clicks with their capture
// times, and glide the marble between server states.

import { SessionApi } from './api.js';
import { layoutTree, marblePosition, renderHud, renderQuestion, renderScene } from './render.js';
import { SessionStore } from './store.js';
import type { TrialView } from './types.js';

const COMPUTER_DELAY_MS = 1000; // pause before showing the computer's reply

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get('api') ?? '';
  const stage = el<HTMLDivElement>('stage');
  const hud = el<HTMLDivElement>('hud');
  const overlay = el<HTMLDivElement>('overlay');
  const marble = el<HTMLDivElement>('marble');

  let api: SessionApi;
  const existing = params.get('session');
  if (existing) {
    // reloading the page resumes the exact server-side state
    api = new SessionApi(baseUrl, existing);
  } else {
    api = await SessionApi.create(baseUrl, {
      group: (params.get('group') as 'A' | 'B') ?? 'A',
      seed: Number(params.get('seed') ?? '1729'),
      participant_id: params.get('participant') ?? 'browser',
      t_ms: Date.now(),
    });
    params.set('session', api.sessionId);
    window.history.replaceState(null, '', `?${params.toString()}`);
  }

  const store = new SessionStore(api);
  let lastView: TrialView | null = null;

  const positionMarble = (view: TrialView) => {
    if (!view.tree || !view.marble_at) {
      marble.style.opacity = '0';
      return;
    }
    const layout = layoutTree(view.tree);
    const at = marblePosition(view, layout);
    if (!at) return;
    const svg = stage.querySelector('svg');
    if (!svg) return;
    const box = svg.getBoundingClientRect();
    const scaleX = box.width / layout.width;
    const scaleY = box.height / layout.height;
    marble.style.opacity = '1';
    marble.style.transform =
      `translate(${box.left + at.x * scaleX - 9}px, ` +
      `${box.top + at.y * scaleY - 9}px)`;
  };

  const draw = (view: TrialView) => {
    const computerMoved =
      lastView !== null &&
      lastView.started &&
      view.marble_at !== lastView.marble_at &&
      lastView.turn === 'C';
    const apply = () => {
      stage.innerHTML = renderScene(view);
      hud.innerHTML = renderHud(view);
      overlay.innerHTML = renderQuestion(view);
      positionMarble(view);
      lastView = view;
    };
    if (computerMoved) {
      window.setTimeout(apply, COMPUTER_DELAY_MS);
    } else {
      apply();
    }
  };
  store.subscribe(draw);

  stage.addEventListener('click', (event) => {
    const target = (event.target as Element).closest('[data-action]');
    if (!target) return;
    const label = target.getAttribute('data-action')!;
    if (!store.canClick(label)) return; // blue or closed trapdoors are inert
    void store.clickTrapdoor(label).catch(() => undefined);
  });

  hud.addEventListener('click', (event) => {
    const target = (event.target as Element).closest('[data-role="start"]');
    if (!target) return;
    void store.startTrial().catch(() => undefined);
  });

  overlay.addEventListener('click', (event) => {
    const target = (event.target as Element).closest('[data-choice]');
    if (!target) return;
    const choice = target.getAttribute('data-choice') as
      | 'left'
      | 'right'
      | 'undecided';
    void store.answerQuestion(choice).catch(() => undefined);
  });

  window.addEventListener('resize', () => {
    if (lastView) positionMarble(lastView);
  });

  await store.refresh();
}

void boot();

// Pure view -> markup functions.  Everything here is a string so the
// scene can be unit-tested without a DOM; main.ts owns mounting,
// events and the marble transition.

import type { TreeView, TrialView } from './types.js';

export interface Point {
  x: number;
  y: number;
}

export interface Layout {
  positions: Map<string, Point>;
  width: number;
  height: number;
}

const X_STEP = 110;
const Y_STEP = 120;
const MARGIN = 70;

/** Positions: leaves left-to-right in display order, parents centered. */
export function layoutTree(tree: TreeView): Layout {
  const positions = new Map<string, Point>();
  let nextLeafX = 0;
  let maxDepth = 0;

  const place = (nodeId: string, depth: number): number => {
    maxDepth = Math.max(maxDepth, depth);
    const node = tree.nodes[nodeId];
    let x: number;
    if (node.kind === 'leaf') {
      x = nextLeafX;
      nextLeafX += X_STEP;
    } else {
      const lx = place(node.left.child, depth + 1);
      const rx = place(node.right.child, depth + 1);
      x = (lx + rx) / 2;
    }
    positions.set(nodeId, { x: x + MARGIN, y: depth * Y_STEP + MARGIN });
    return x;
  };

  place(tree.root, 0);
  return {
    positions,
    width: nextLeafX - X_STEP + 2 * MARGIN,
    height: maxDepth * Y_STEP + 2 * MARGIN + 40,
  };
}

export function marblePosition(view: TrialView, layout: Layout): Point | null {
  if (!view.marble_at) return null;
  return layout.positions.get(view.marble_at) ?? null;
}

const esc = (s: string) => s.replace(/&/g, '&amp;').replace(/</g, '&lt;');

/** The SVG scene: chutes, trapdoors, bins.  The marble is overlaid by
 * main.ts so its movement can be animated across re-renders. */
export function renderScene(view: TrialView): string {
  if (!view.tree) return '<svg class="scene" viewBox="0 0 400 120"></svg>';
  const tree = view.tree;
  const layout = layoutTree(tree);
  const parts: string[] = [];

  for (const [nodeId, node] of Object.entries(tree.nodes)) {
    const at = layout.positions.get(nodeId)!;
    if (node.kind === 'decision') {
      for (const side of ['left', 'right'] as const) {
        const ref = node[side];
        const childAt = layout.positions.get(ref.child)!;
        parts.push(
          `<line class="chute" x1="${at.x}" y1="${at.y}" ` +
            `x2="${childAt.x}" y2="${childAt.y}"/>`,
        );
      }
    }
  }

  for (const [nodeId, node] of Object.entries(tree.nodes)) {
    const at = layout.positions.get(nodeId)!;
    if (node.kind === 'leaf') {
      const highlight = view.done && view.marble_at === nodeId ? ' bin-hit' : '';
      parts.push(
        `<g class="bin${highlight}" data-node="${nodeId}">` +
          `<rect x="${at.x - 34}" y="${at.y - 14}" width="68" height="42" rx="6"/>` +
          `<text class="bin-orange" x="${at.x - 16}" y="${at.y + 6}">` +
          `● ${node.orange}</text>` +
          `<text class="bin-blue" x="${at.x - 16}" y="${at.y + 22}">` +
          `● ${node.blue}</text>` +
          `</g>`,
      );
      continue;
    }
    const color = node.owner === 'P' ? 'orange' : 'blue';
    for (const side of ['left', 'right'] as const) {
      const ref = node[side];
      const clickable = view.legal_actions.includes(ref.label);
      const dx = side === 'left' ? -30 : 30;
      const classes = `trapdoor trapdoor-${color}${clickable ? ' clickable' : ''}`;
      parts.push(
        `<g class="${classes}" data-action="${esc(ref.label)}" data-side="${side}">` +
          `<rect x="${at.x + dx - 22}" y="${at.y - 12}" width="44" height="24" rx="4"/>` +
          `<text x="${at.x + dx}" y="${at.y + 5}">${esc(ref.label)}</text>` +
          `</g>`,
      );
    }
    parts.push(
      `<circle class="junction owner-${color}" cx="${at.x}" cy="${at.y}" r="6"/>`,
    );
  }

  return (
    `<svg class="scene" viewBox="0 0 ${layout.width} ${layout.height}" ` +
    `data-game="${esc(view.game_id ?? '')}">` +
    parts.join('') +
    '</svg>'
  );
}

export function renderHud(view: TrialView): string {
  const phaseLabel: Record<string, string> = {
    practice: 'Practice game',
    experimental: 'Game',
    break: 'Break',
    finished: 'Finished',
  };
  const trialNumber = Math.min(view.trial_index + 1, view.trial_count);
  const title = view.session_finished
    ? 'All games finished'
    : `${phaseLabel[view.phase]} ${trialNumber} of ${view.trial_count}`;
  const totals = view.practice
    ? view.totals.practice_participant
    : view.totals.participant;
  const banner =
    view.done && view.last_gain !== null
      ? `<div class="banner">You gained ${view.last_gain} marble${
          view.last_gain === 1 ? '' : 's'
        }!</div>`
      : '';
  const breakNote =
    view.phase === 'break'
      ? '<div class="banner break-note">Take a 5 minute break.</div>'
      : '';
  let button = '';
  if (!view.session_finished) {
    if (!view.started) {
      const label = view.trial_index === 0 || view.phase === 'break' ? 'START GAME' : 'NEXT';
      button = `<button class="primary" data-role="start">${label}</button>`;
    } else if (view.done && !view.pending_question) {
      // the server arms the next trial automatically on finalization;
      // this state only shows while the gain banner lingers
      button = '';
    }
  }
  return (
    `<div class="hud">` +
    `<div class="hud-title">${title}</div>` +
    `<div class="hud-totals">Your marbles: <b>${totals}</b></div>` +
    banner +
    breakNote +
    button +
    `</div>`
  );
}

export function renderQuestion(view: TrialView): string {
  if (!view.pending_question) return '';
  return (
    '<div class="modal-backdrop"><div class="modal" role="dialog">' +
    '<p>When you made your initial choice, what did you think the computer ' +
    'was about to do next?</p>' +
    '<button data-choice="left">I thought the computer would most likely play left</button>' +
    '<button data-choice="right">I thought the computer would most likely play right</button>' +
    '<button data-choice="undecided">Neither of the above</button>' +
    '</div></div>'
  );
}

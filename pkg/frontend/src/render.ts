import { projectTo2d } from './pca.js';
import type { SessionState } from './store.js';
import type { Decision, QueueItem } from './types.js';

const PALETTE = ['#4e79a7', '#f28e2b', '#59a14f', '#e15759', '#b07aa1',
                 '#76b7b2', '#edc948', '#ff9da7'];

export interface RenderCallbacks {
  onSelect(sampleId: number): void;
  onDecide(sampleId: number, decision: Decision): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStatus(state: SessionState): void {
  const root = document.getElementById('status')!;
  root.textContent = '';
  const s = state.status;
  if (!s) {
    root.append(el('span', 'muted', 'connecting…'));
    return;
  }
  const acc = s.test_accuracy === null ? 'n/a' : s.test_accuracy.toFixed(3);
  const cells: Array<[string, string]> = [
    ['state', s.state],
    ['iteration', String(s.iteration)],
    ['annotated', String(s.annotated)],
    ['rejected', String(s.rejected)],
    ['self-labeled', String(s.pseudo)],
    ['budget left', String(s.budget_remaining)],
    ['test accuracy', acc],
  ];
  for (const [name, value] of cells) {
    const cell = el('div', 'stat');
    cell.append(el('div', 'stat-name', name), el('div', 'stat-value', value));
    root.append(cell);
  }
}

function renderBanner(state: SessionState): void {
  const banner = document.getElementById('banner')!;
  banner.textContent = state.banner ?? '';
  banner.style.display = state.banner ? 'block' : 'none';
}

function predictionBars(item: QueueItem): HTMLElement {
  const wrap = el('div', 'bars');
  item.predictions.forEach((p, j) => {
    const row = el('div', 'bar-row');
    row.append(el('span', 'bar-label', `c${j}`));
    const track = el('div', 'bar-track');
    const fill = el('div', 'bar-fill');
    fill.style.width = `${Math.round(p * 100)}%`;
    fill.style.background = PALETTE[j % PALETTE.length];
    track.append(fill);
    row.append(track, el('span', 'bar-value', p.toFixed(2)));
    wrap.append(row);
  });
  return wrap;
}

function renderQueue(state: SessionState, cb: RenderCallbacks): void {
  const root = document.getElementById('queue')!;
  root.textContent = '';
  if (state.queue.length === 0) {
    root.append(el('div', 'empty',
                   state.status?.state === 'DONE'
                     ? 'run finished — nothing left to label'
                     : 'all caught up — waiting for the next round'));
    return;
  }
  for (const item of state.queue) {
    const card = el('div', 'card' + (item.sample_id === state.selectedId
                                       ? ' selected' : ''));
    const head = el('div', 'card-head');
    head.append(el('span', 'card-id', `sample ${item.sample_id}`),
                el('span', 'card-loss',
                   `total loss ${item.total_loss.toFixed(2)}`));
    card.append(head, predictionBars(item));
    card.addEventListener('click', () => cb.onSelect(item.sample_id));
    root.append(card);
  }
}

function renderPanel(state: SessionState, cb: RenderCallbacks): void {
  const root = document.getElementById('panel')!;
  root.textContent = '';
  const item = state.queue.find((q) => q.sample_id === state.selectedId);
  if (!item) {
    root.append(el('div', 'muted', 'select a queued sample to label it'));
    return;
  }
  root.append(el('h3', undefined, `label sample ${item.sample_id}`));
  const buttons = el('div', 'choices');
  item.predictions.forEach((_, j) => {
    const btn = el('button', 'choice', `category ${j}`);
    btn.style.borderColor = PALETTE[j % PALETTE.length];
    btn.addEventListener('click',
                         () => cb.onDecide(item.sample_id, { label: j }));
    buttons.append(btn);
  });
  const reject = el('button', 'choice reject', 'reject: undefined');
  reject.addEventListener('click', () => cb.onDecide(item.sample_id, 'reject'));
  buttons.append(reject);
  root.append(buttons);
}

function renderScatter(state: SessionState, cb: RenderCallbacks): void {
  const canvas = document.getElementById('scatter') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d')!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (state.queue.length === 0) return;

  const points = projectTo2d(state.queue.map((q) => q.features));
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const pad = 18;
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  const yMin = Math.min(...ys), yMax = Math.max(...ys);
  const sx = (x: number) => pad + (canvas.width - 2 * pad)
    * (xMax === xMin ? 0.5 : (x - xMin) / (xMax - xMin));
  const sy = (y: number) => canvas.height - pad - (canvas.height - 2 * pad)
    * (yMax === yMin ? 0.5 : (y - yMin) / (yMax - yMin));

  state.queue.forEach((item, i) => {
    const guess = item.predictions.indexOf(Math.max(...item.predictions));
    const selected = item.sample_id === state.selectedId;
    ctx.beginPath();
    ctx.arc(sx(points[i][0]), sy(points[i][1]), selected ? 9 : 4.5,
            0, 2 * Math.PI);
    ctx.fillStyle = PALETTE[guess % PALETTE.length];
    ctx.globalAlpha = selected ? 1.0 : 0.55;
    ctx.fill();
    if (selected) {
      ctx.globalAlpha = 1.0;
      ctx.lineWidth = 2;
      ctx.strokeStyle = '#111';
      ctx.stroke();
    }
  });
  ctx.globalAlpha = 1.0;

  canvas.onclick = (event) => {
    const rect = canvas.getBoundingClientRect();
    const cx = event.clientX - rect.left;
    const cy = event.clientY - rect.top;
    let best = -1;
    let bestDist = 12;
    points.forEach((p, i) => {
      const dist = Math.hypot(sx(p[0]) - cx, sy(p[1]) - cy);
      if (dist < bestDist) { best = i; bestDist = dist; }
    });
    if (best >= 0) cb.onSelect(state.queue[best].sample_id);
  };
}

export function render(state: SessionState, cb: RenderCallbacks): void {
  renderStatus(state);
  renderBanner(state);
  renderQueue(state, cb);
  renderPanel(state, cb);
  renderScatter(state, cb);
}

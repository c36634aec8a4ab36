import { ApiClient } from './api.js';
import { render } from './render.js';
import { SessionStore } from './store.js';

const POLL_INTERVAL_MS = 1000;

const store = new SessionStore(new ApiClient(''));

const callbacks = {
  onSelect: (sampleId: number) => store.select(sampleId),
  // decisions are only ever sent from these click paths
  onDecide: (sampleId: number, decision: { label: number } | 'reject') => {
    void store.submit(sampleId, decision);
  },
};

store.onChange((state) => render(state, callbacks));

async function tick(): Promise<void> {
  await store.refresh();
  window.setTimeout(() => void tick(), POLL_INTERVAL_MS);
}

void tick();

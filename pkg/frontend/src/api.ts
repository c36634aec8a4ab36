import type { Decision, PostResult, QueueItem, StatusDoc } from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin JSON client over the three service endpoints. */
export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async fetchStatus(): Promise<StatusDoc> {
    const resp = await this.fetchImpl(`${this.base}/api/status`);
    if (!resp.ok) throw new Error(`status endpoint returned ${resp.status}`);
    return (await resp.json()) as StatusDoc;
  }

  async fetchQueue(limit = 50): Promise<QueueItem[]> {
    const resp = await this.fetchImpl(`${this.base}/api/queue?limit=${limit}`);
    if (!resp.ok) throw new Error(`queue endpoint returned ${resp.status}`);
    return (await resp.json()) as QueueItem[];
  }

  async postAnnotation(sampleId: number, decision: Decision): Promise<PostResult> {
    const resp = await this.fetchImpl(`${this.base}/api/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ sample_id: sampleId, decision }),
    });
    let body: Record<string, unknown> = {};
    try {
      body = (await resp.json()) as Record<string, unknown>;
    } catch {
      // non-JSON error bodies fall through with defaults
    }
    return {
      ok: resp.ok,
      status: resp.status,
      accepted: Boolean(body['accepted']),
      duplicate: Boolean(body['duplicate']),
      error: typeof body['error'] === 'string' ? (body['error'] as string) : undefined,
    };
  }
}

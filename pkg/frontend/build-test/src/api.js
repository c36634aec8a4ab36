/** Thin JSON client over the three service endpoints. */
export class ApiClient {
    constructor(base = '', fetchImpl = (url, init) => fetch(url, init)) {
        this.base = base;
        this.fetchImpl = fetchImpl;
    }
    async fetchStatus() {
        const resp = await this.fetchImpl(`${this.base}/api/status`);
        if (!resp.ok)
            throw new Error(`status endpoint returned ${resp.status}`);
        return (await resp.json());
    }
    async fetchQueue(limit = 50) {
        const resp = await this.fetchImpl(`${this.base}/api/queue?limit=${limit}`);
        if (!resp.ok)
            throw new Error(`queue endpoint returned ${resp.status}`);
        return (await resp.json());
    }
    async postAnnotation(sampleId, decision) {
        const resp = await this.fetchImpl(`${this.base}/api/annotations`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ sample_id: sampleId, decision }),
        });
        let body = {};
        try {
            body = (await resp.json());
        }
        catch {
            // non-JSON error bodies fall through with defaults
        }
        return {
            ok: resp.ok,
            status: resp.status,
            accepted: Boolean(body['accepted']),
            duplicate: Boolean(body['duplicate']),
            error: typeof body['error'] === 'string' ? body['error'] : undefined,
        };
    }
}

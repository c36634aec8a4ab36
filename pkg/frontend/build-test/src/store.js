/** UI state derived purely from the three endpoints.
 *
 * Submissions are optimistic: the item leaves the list immediately and
 * comes back (with an explanation) if the server refuses it.  Decisions
 * that fail on the network are kept for retry on the next poll tick; a
 * full page reload rebuilds identical state from the server.
 */
export class SessionStore {
    constructor(api) {
        this.api = api;
        this.state = {
            status: null,
            queue: [],
            selectedId: null,
            banner: null,
            retryQueue: [],
        };
        this.listeners = [];
    }
    onChange(listener) {
        this.listeners.push(listener);
    }
    emit() {
        for (const listener of this.listeners)
            listener(this.state);
    }
    select(sampleId) {
        this.state.selectedId = sampleId;
        this.emit();
    }
    /** One poll tick: flush retries, then refresh status and queue. */
    async refresh() {
        const retries = this.state.retryQueue;
        this.state.retryQueue = [];
        for (const entry of retries) {
            await this.submit(entry.sampleId, entry.decision);
        }
        try {
            const [status, queue] = await Promise.all([
                this.api.fetchStatus(),
                this.api.fetchQueue(50),
            ]);
            this.state.status = status;
            this.state.queue = queue;
            if (this.state.banner?.startsWith('service unreachable')) {
                this.state.banner = null;
            }
            if (this.state.selectedId !== null
                && !queue.some((q) => q.sample_id === this.state.selectedId)) {
                // resolved elsewhere mid-session: drop the selection quietly
                this.state.selectedId = null;
            }
        }
        catch (err) {
            this.state.banner = `service unreachable, retrying (${String(err)})`;
        }
        this.emit();
    }
    async submit(sampleId, decision) {
        const held = this.state.queue.find((q) => q.sample_id === sampleId);
        this.state.queue = this.state.queue.filter((q) => q.sample_id !== sampleId);
        if (this.state.selectedId === sampleId)
            this.state.selectedId = null;
        this.emit();
        let result;
        try {
            result = await this.api.postAnnotation(sampleId, decision);
        }
        catch (err) {
            // network failure: keep the decision for the next tick
            this.state.retryQueue.push({ sampleId, decision });
            this.state.banner = `submit failed, will retry (${String(err)})`;
            this.emit();
            return false;
        }
        if (result.ok) {
            return true;
        }
        // the server refused: put the item back and explain
        if (held) {
            this.state.queue = [...this.state.queue, held]
                .sort((a, b) => b.total_loss - a.total_loss);
        }
        this.state.banner = `decision refused (${result.status}): `
            + (result.error ?? 'unknown error');
        this.emit();
        return false;
    }
}

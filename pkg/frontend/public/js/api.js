// ── Errors ──────────────────────────────────────────
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
/** The service answers 409 when a rater re-submits a pairing it already
 *  resolved for them; callers treat that as "refresh, don't record". */
export function isStale(err) {
    return err instanceof ApiError && err.status === 409;
}
export class Client {
    constructor(baseUrl = "", fetchFn = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        let res;
        try {
            res = await this.fetchFn(this.baseUrl + path, init);
        }
        catch (err) {
            throw new ApiError(0, `service unreachable: ${String(err)}`);
        }
        const body = await res.text();
        if (!res.ok) {
            let detail = body;
            try {
                detail = JSON.parse(body).error ?? body;
            }
            catch {
                // non-JSON error body, keep raw text
            }
            throw new ApiError(res.status, detail);
        }
        return JSON.parse(body);
    }
    tournament() {
        return this.request("/api/tournament");
    }
    pairing() {
        return this.request("/api/pairing");
    }
    agreement() {
        return this.request("/api/agreement");
    }
    submitVerdict(pairingId, verdict, rater) {
        return this.request("/api/verdict", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ pairing_id: pairingId, verdict, rater }),
        });
    }
    assetUrl(name) {
        return `${this.baseUrl}/assets/${encodeURIComponent(name)}`;
    }
}

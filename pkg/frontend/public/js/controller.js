import { isStale } from "./api.js";
export function canSubmit(state) {
    return (state.phase === "pairing" &&
        state.pairing !== null &&
        !state.submitting &&
        !state.submittedHere &&
        state.assetGate === "ready");
}
function initialState() {
    return {
        phase: "loading",
        pairing: null,
        champion: null,
        tournament: null,
        agreement: null,
        resolved: 0,
        totalPairings: 0,
        assetGate: "pending",
        submitting: false,
        submittedHere: false,
        notice: null,
        error: null,
    };
}
// ── Controller ──────────────────────────────────────
// Session rules, enforced here rather than in the DOM layer:
//   * only pairing ids received from the service are ever submitted;
//   * at most one verdict per pairing leaves this session (in-flight and
//     already-submitted guards), the service's 409 backstops the rest.
export class Controller {
    constructor(api, rater, onChange = () => { }) {
        this.api = api;
        this.rater = rater;
        this.onChange = onChange;
        this.current = initialState();
        this.submitted = new Set();
    }
    get state() {
        return this.current;
    }
    emit(patch) {
        this.current = { ...this.current, ...patch };
        this.onChange(this.current);
    }
    async refresh() {
        try {
            const [payload, tournament, agreement] = await Promise.all([
                this.api.pairing(),
                this.api.tournament(),
                this.api.agreement(),
            ]);
            const base = {
                tournament,
                agreement,
                resolved: payload.resolved,
                totalPairings: payload.total_pairings,
                notice: null,
                error: null,
            };
            if (payload.complete || payload.pairing === null) {
                this.emit({
                    ...base,
                    phase: "champion",
                    pairing: null,
                    champion: payload.champion,
                    assetGate: "ready",
                    submittedHere: false,
                });
                return;
            }
            const id = payload.pairing.pairing_id;
            const known = tournament.pairings.some((p) => p.pairing_id === id);
            if (!known) {
                // Never display state the bracket does not vouch for.
                this.emit({
                    ...base,
                    phase: "error",
                    pairing: null,
                    champion: null,
                    error: `service returned unknown pairing id ${id}`,
                });
                return;
            }
            const samePairing = this.current.pairing?.pairing_id === id;
            this.emit({
                ...base,
                phase: "pairing",
                pairing: payload.pairing,
                champion: null,
                assetGate: samePairing ? this.current.assetGate : "pending",
                submittedHere: this.submitted.has(id),
            });
        }
        catch (err) {
            this.emit({
                phase: "error",
                error: err instanceof Error ? err.message : String(err),
            });
        }
    }
    setAssetGate(gate) {
        if (this.current.assetGate !== gate)
            this.emit({ assetGate: gate });
    }
    async submit(verdict) {
        if (!canSubmit(this.current))
            return;
        const pairingId = this.current.pairing.pairing_id;
        this.emit({ submitting: true });
        try {
            await this.api.submitVerdict(pairingId, verdict, this.rater);
            this.submitted.add(pairingId);
            this.emit({ submitting: false });
            await this.refresh();
        }
        catch (err) {
            if (isStale(err)) {
                // Someone else resolved it first; show the live state, record nothing.
                this.submitted.add(pairingId);
                this.emit({ submitting: false });
                await this.refresh();
                this.emit({ notice: "that pairing was already resolved; showing the current one" });
                return;
            }
            this.emit({
                submitting: false,
                phase: "error",
                error: err instanceof Error ? err.message : String(err),
            });
        }
    }
}

import { isStale } from "./api.js";
import type {
  Agreement,
  Contender,
  Pairing,
  PairingPayload,
  TournamentState,
  Verdict,
} from "./types.js";

// ── API surface the controller needs ────────────────

export interface TournamentApi {
  pairing(): Promise<PairingPayload>;
  tournament(): Promise<TournamentState>;
  agreement(): Promise<Agreement>;
  submitVerdict(
    pairingId: string,
    verdict: Verdict,
    rater: string,
  ): Promise<TournamentState>;
}

// ── View state ──────────────────────────────────────

export type Phase = "loading" | "pairing" | "champion" | "error";

/** Tiles start "pending"; the renderer flips to "ready" once every asset
 *  finished loading, or "failed" if any 404s. Verdicts are blocked until
 *  ready so a rater never judges a half-drawn pairing. */
export type AssetGate = "pending" | "ready" | "failed";

export interface ViewState {
  phase: Phase;
  pairing: Pairing | null;
  champion: Contender | null;
  tournament: TournamentState | null;
  agreement: Agreement | null;
  resolved: number;
  totalPairings: number;
  assetGate: AssetGate;
  submitting: boolean;
  submittedHere: boolean;
  notice: string | null;
  error: string | null;
}

export function canSubmit(state: ViewState): boolean {
  return (
    state.phase === "pairing" &&
    state.pairing !== null &&
    !state.submitting &&
    !state.submittedHere &&
    state.assetGate === "ready"
  );
}

function initialState(): ViewState {
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
  private current: ViewState = initialState();
  private readonly submitted = new Set<string>();

  constructor(
    private readonly api: TournamentApi,
    private readonly rater: string,
    private readonly onChange: (state: ViewState) => void = () => {},
  ) {}

  get state(): ViewState {
    return this.current;
  }

  private emit(patch: Partial<ViewState>): void {
    this.current = { ...this.current, ...patch };
    this.onChange(this.current);
  }

  async refresh(): Promise<void> {
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
    } catch (err) {
      this.emit({
        phase: "error",
        error: err instanceof Error ? err.message : String(err),
      });
    }
  }

  setAssetGate(gate: AssetGate): void {
    if (this.current.assetGate !== gate) this.emit({ assetGate: gate });
  }

  async submit(verdict: Verdict): Promise<void> {
    if (!canSubmit(this.current)) return;
    const pairingId = this.current.pairing!.pairing_id;
    this.emit({ submitting: true });
    try {
      await this.api.submitVerdict(pairingId, verdict, this.rater);
      this.submitted.add(pairingId);
      this.emit({ submitting: false });
      await this.refresh();
    } catch (err) {
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

import { ApiError } from "../src/api.js";
import type { TournamentApi } from "../src/controller.js";
import type {
  Agreement,
  Contender,
  Pairing,
  PairingPayload,
  TournamentState,
  Verdict,
} from "../src/types.js";

export function contender(
  configId: string,
  cost: number,
  steps = 2,
): Contender {
  return {
    config_id: configId,
    cost,
    label: `${configId} label`,
    assets: Array.from({ length: steps }, (_, i) => `${configId}_${i + 1}.svg`),
    step_texts: Array.from({ length: steps }, (_, i) => `step ${i + 1}`),
  };
}

/** In-memory stand-in for the tournament service: champion-stays ladder,
 *  cheaper config advances on BOTH_* (config id breaks cost ties), 409 when
 *  a rater re-submits a pairing already resolved for them, agreement-only
 *  ratings from new raters. Close enough for controller tests; the real
 *  service is exercised by the acceptance suite. */
export class FakeService implements TournamentApi {
  pairings: Pairing[] = [];
  submits: Array<{ pairingId: string; verdict: Verdict; rater: string }> = [];
  private queue: Contender[];

  constructor(private readonly contenders: Contender[]) {
    if (contenders.length < 2) throw new Error("need two contenders");
    this.queue = contenders.slice(2);
    this.pairings.push(this.makePairing(contenders[0]!, contenders[1]!));
  }

  private makePairing(left: Contender, right: Contender): Pairing {
    return {
      pairing_id: `p${String(this.pairings.length + 1).padStart(3, "0")}`,
      left,
      right,
      ratings: [],
      winner_id: null,
    };
  }

  private get open(): Pairing | null {
    const last = this.pairings[this.pairings.length - 1]!;
    return last.winner_id === null ? last : null;
  }

  private championId(): string | null {
    const last = this.pairings[this.pairings.length - 1]!;
    return this.queue.length === 0 ? last.winner_id : null;
  }

  state(): TournamentState {
    return {
      champion_id: this.championId(),
      complete: this.championId() !== null,
      contenders: this.contenders,
      pairings: structuredClone(this.pairings),
      pending_pairing_id: this.open?.pairing_id ?? null,
      resolved: this.pairings.filter((p) => p.winner_id !== null).length,
      total_pairings: this.contenders.length - 1,
    };
  }

  async tournament(): Promise<TournamentState> {
    return this.state();
  }

  async pairing(): Promise<PairingPayload> {
    const open = this.open;
    const state = this.state();
    if (open === null && state.complete) {
      const champion =
        this.contenders.find((c) => c.config_id === state.champion_id) ?? null;
      return {
        complete: true,
        pairing: null,
        champion,
        resolved: state.resolved,
        total_pairings: state.total_pairings,
      };
    }
    return {
      complete: false,
      pairing: structuredClone(open),
      champion: null,
      resolved: state.resolved,
      total_pairings: state.total_pairings,
    };
  }

  async agreement(): Promise<Agreement> {
    const multi = this.pairings.filter((p) => p.ratings.length >= 2);
    if (multi.length === 0)
      return { kappa: null, pairings_rated: 0, ratings_per_pairing: 0 };
    const unanimous = multi.every((p) =>
      p.ratings.every((r) => r.verdict === p.ratings[0]!.verdict),
    );
    return {
      kappa: unanimous ? 1.0 : 0.0,
      pairings_rated: multi.length,
      ratings_per_pairing: Math.min(...multi.map((p) => p.ratings.length)),
    };
  }

  async submitVerdict(
    pairingId: string,
    verdict: Verdict,
    rater: string,
  ): Promise<TournamentState> {
    this.submits.push({ pairingId, verdict, rater });
    const pairing = this.pairings.find((p) => p.pairing_id === pairingId);
    if (pairing === undefined)
      throw new ApiError(409, `unknown pairing ${pairingId}`);
    if (pairing.winner_id !== null) {
      if (pairing.ratings.some((r) => r.rater === rater))
        throw new ApiError(409, `pairing ${pairingId} already rated by ${rater}`);
      pairing.ratings.push({ rater, verdict });
      return this.state();
    }
    pairing.ratings.push({ rater, verdict });
    const winner = this.decide(pairing, verdict);
    pairing.winner_id = winner.config_id;
    const next = this.queue.shift();
    if (next !== undefined) this.pairings.push(this.makePairing(winner, next));
    return this.state();
  }

  private decide(pairing: Pairing, verdict: Verdict): Contender {
    if (verdict === "FIRST") return pairing.left;
    if (verdict === "SECOND") return pairing.right;
    if (pairing.left.cost !== pairing.right.cost)
      return pairing.left.cost < pairing.right.cost ? pairing.left : pairing.right;
    return pairing.left.config_id < pairing.right.config_id
      ? pairing.left
      : pairing.right;
  }
}

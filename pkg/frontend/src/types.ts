// JSON shapes served by the beamlat tournament API. Field names mirror the
// service verbatim; do not rename.

export type Verdict = "FIRST" | "SECOND" | "BOTH_GOOD" | "BOTH_BAD";

export const VERDICTS: readonly Verdict[] = [
  "FIRST",
  "SECOND",
  "BOTH_GOOD",
  "BOTH_BAD",
];

export interface Contender {
  config_id: string;
  cost: number;
  label: string;
  assets: string[];
  step_texts: string[];
}

export interface Rating {
  rater: string;
  verdict: Verdict;
}

export interface Pairing {
  pairing_id: string;
  left: Contender;
  right: Contender;
  ratings: Rating[];
  winner_id: string | null;
}

export interface TournamentState {
  champion_id: string | null;
  complete: boolean;
  contenders: Contender[];
  pairings: Pairing[];
  pending_pairing_id: string | null;
  resolved: number;
  total_pairings: number;
}

/** GET /api/pairing: exactly one of pairing / champion is non-null. */
export interface PairingPayload {
  complete: boolean;
  pairing: Pairing | null;
  champion: Contender | null;
  resolved: number;
  total_pairings: number;
}

export interface Agreement {
  kappa: number | null;
  pairings_rated: number;
  ratings_per_pairing: number;
}

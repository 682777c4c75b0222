import { canSubmit, type ViewState } from "./controller.js";
import type { Agreement, Contender, TournamentState, Verdict } from "./types.js";

// All renderers return HTML strings so they can be tested without a DOM.
// main.ts owns event wiring and asset-load tracking.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// ── Pairing ─────────────────────────────────────────

const VERDICT_LABELS: readonly [Verdict, string][] = [
  ["FIRST", "left is better"],
  ["SECOND", "right is better"],
  ["BOTH_GOOD", "both good"],
  ["BOTH_BAD", "both bad"],
];

function renderColumn(
  side: "left" | "right",
  contender: Contender,
  assetUrl: (name: string) => string,
): string {
  const tiles = contender.assets
    .map((name, i) => {
      const caption = contender.step_texts[i] ?? "";
      return `
      <figure class="tile">
        <img src="${escapeHtml(assetUrl(name))}" alt="${escapeHtml(caption)}" data-asset="${escapeHtml(name)}">
        <figcaption>${escapeHtml(caption)}</figcaption>
      </figure>`;
    })
    .join("");
  return `
  <section class="column ${side}">
    <header>
      <h2>${escapeHtml(contender.label || contender.config_id)}</h2>
      <p class="muted">${escapeHtml(contender.config_id)} | cost ${contender.cost}</p>
    </header>
    ${tiles}
  </section>`;
}

function renderVerdictBar(enabled: boolean): string {
  const buttons = VERDICT_LABELS.map(
    ([verdict, label]) =>
      `<button data-verdict="${verdict}"${enabled ? "" : " disabled"}>${label}</button>`,
  ).join("");
  return `<div class="verdict-bar">${buttons}</div>`;
}

function renderPairing(state: ViewState, assetUrl: (name: string) => string): string {
  const pairing = state.pairing!;
  const position = `pairing ${escapeHtml(pairing.pairing_id)} · ${state.resolved} of ${state.totalPairings} resolved`;
  const hint =
    state.assetGate === "failed"
      ? `<p class="warn">some tiles failed to load; judging is disabled</p>`
      : state.submittedHere
        ? `<p class="muted">verdict sent, waiting for the bracket to move on</p>`
        : "";
  return `
  <p class="muted">${position}</p>
  <div class="arena">
    ${renderColumn("left", pairing.left, assetUrl)}
    ${renderColumn("right", pairing.right, assetUrl)}
  </div>
  ${renderVerdictBar(canSubmit(state))}
  ${hint}`;
}

// ── Champion ────────────────────────────────────────

function renderChampion(champion: Contender | null, resolved: number): string {
  if (champion === null) return `<p class="warn">tournament complete, no champion reported</p>`;
  return `
  <section class="champion">
    <h2>champion: ${escapeHtml(champion.label || champion.config_id)}</h2>
    <p class="muted">${escapeHtml(champion.config_id)} | cost ${champion.cost} | decided over ${resolved} pairings</p>
  </section>`;
}

// ── Progress + agreement panel ──────────────────────

export function renderProgress(
  tournament: TournamentState | null,
  agreement: Agreement | null,
): string {
  if (tournament === null) return "";
  const history = tournament.pairings
    .filter((p) => p.winner_id !== null)
    .map(
      (p) =>
        `<li>${escapeHtml(p.pairing_id)}: ${escapeHtml(p.left.config_id)} vs ${escapeHtml(p.right.config_id)} → ${escapeHtml(p.winner_id!)}</li>`,
    )
    .join("");
  const remaining = tournament.total_pairings - tournament.resolved;
  // kappa is only meaningful once a second rater has covered the same
  // pairings; otherwise the panel stays silent about it.
  const kappaLine =
    agreement !== null && agreement.kappa !== null && agreement.ratings_per_pairing >= 2
      ? `<p class="kappa">κ = ${agreement.kappa.toFixed(2)} over ${agreement.pairings_rated} pairings × ${agreement.ratings_per_pairing} raters</p>`
      : "";
  return `
  <aside class="progress">
    <h3>bracket</h3>
    <ul>${history}</ul>
    <p class="muted">${remaining} pairing${remaining === 1 ? "" : "s"} remaining</p>
    ${kappaLine}
  </aside>`;
}

// ── Top-level dispatch ──────────────────────────────

export function renderApp(state: ViewState, assetUrl: (name: string) => string): string {
  const notice = state.notice ? `<p class="notice">${escapeHtml(state.notice)}</p>` : "";
  let body: string;
  switch (state.phase) {
    case "loading":
      body = `<p class="muted">loading…</p>`;
      break;
    case "error":
      body = `<p class="error-banner">${escapeHtml(state.error ?? "unknown error")}</p>`;
      break;
    case "champion":
      body = renderChampion(state.champion, state.resolved);
      break;
    case "pairing":
      body = renderPairing(state, assetUrl);
      break;
  }
  return `${notice}${body}${renderProgress(state.tournament, state.agreement)}`;
}

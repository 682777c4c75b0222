"""Pairwise preference tournament over decoding configurations.

A champion-stays ladder: the first two contenders meet, the winner faces the
next contender, and so on, resolving n-1 pairings.  Verdicts are FIRST,
SECOND, BOTH_GOOD or BOTH_BAD; the BOTH_* verdicts advance the cheaper
contender (fewer denoiser calls; ties break on config id).  Every verdict is
appended to a JSON-lines journal, so a crashed session replays to the exact
same state.  Once a pairing is resolved, additional raters may still submit
verdicts for it; those are kept as agreement ratings and never change the
bracket.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import DegenerateRatingsError, JournalError, StalePairingError
from .metrics import fleiss_kappa

VERDICTS = ("FIRST", "SECOND", "BOTH_GOOD", "BOTH_BAD")


@dataclass(frozen=True)
class Contender:
    config_id: str
    cost: int
    label: str = ""
    assets: tuple[str, ...] = ()
    step_texts: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "config_id": self.config_id,
            "cost": self.cost,
            "label": self.label,
            "assets": list(self.assets),
            "step_texts": list(self.step_texts),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Contender":
        return cls(
            config_id=data["config_id"],
            cost=int(data["cost"]),
            label=data.get("label", ""),
            assets=tuple(data.get("assets", ())),
            step_texts=tuple(data.get("step_texts", ())),
        )


@dataclass
class Pairing:
    pairing_id: str
    left: Contender
    right: Contender
    winner_id: str | None = None
    ratings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return self.winner_id is not None

    def to_json(self) -> dict:
        return {
            "pairing_id": self.pairing_id,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "winner_id": self.winner_id,
            "ratings": [{"rater": r, "verdict": v} for r, v in self.ratings],
        }


def _winner(pairing: Pairing, verdict: str) -> Contender:
    if verdict == "FIRST":
        return pairing.left
    if verdict == "SECOND":
        return pairing.right
    # quality tie: the cheaper contender advances
    return min(pairing.left, pairing.right, key=lambda c: (c.cost, c.config_id))


class Tournament:
    def __init__(self, contenders: list[Contender], journal_path: str | Path | None = None):
        if len(contenders) < 2:
            raise ValueError("a tournament needs at least two contenders")
        ids = [c.config_id for c in contenders]
        if len(set(ids)) != len(ids):
            raise ValueError("contender ids must be unique")
        self.contenders = list(contenders)
        self.journal_path = Path(journal_path) if journal_path is not None else None
        self.pairings: list[Pairing] = []
        self._champion = contenders[0]
        self._next_challenger = 1
        if self.journal_path is not None:
            self._append({"event": "init", "contenders": [c.to_json() for c in contenders]})

    # -- journal ----------------------------------------------------------

    def _append(self, event: dict) -> None:
        if self.journal_path is None:
            return
        with open(self.journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    @classmethod
    def from_journal(cls, path: str | Path) -> "Tournament":
        """Rebuild a tournament by replaying its journal.  Malformed lines
        raise JournalError carrying the line number and byte offset."""
        path = Path(path)
        raw = path.read_bytes()
        tournament: Tournament | None = None
        offset = 0
        for lineno, line in enumerate(raw.split(b"\n"), start=1):
            stripped = line.strip()
            if stripped:
                try:
                    event = json.loads(stripped.decode("utf-8"))
                    kind = event["event"]
                except (ValueError, KeyError, UnicodeDecodeError) as exc:
                    raise JournalError(
                        f"corrupt journal entry: {exc}", line=lineno, offset=offset
                    ) from exc
                if kind == "init":
                    if tournament is not None:
                        raise JournalError(
                            "duplicate init event", line=lineno, offset=offset
                        )
                    contenders = [Contender.from_json(c) for c in event["contenders"]]
                    tournament = cls(contenders, journal_path=None)
                elif kind in ("verdict", "rating"):
                    if tournament is None:
                        raise JournalError(
                            "journal must start with an init event", line=lineno, offset=offset
                        )
                    try:
                        tournament.record_verdict(
                            event["pairing_id"], event["verdict"], rater=event["rater"]
                        )
                    except (StalePairingError, ValueError, KeyError) as exc:
                        raise JournalError(
                            f"inconsistent journal event: {exc}", line=lineno, offset=offset
                        ) from exc
                else:
                    raise JournalError(
                        f"unknown event kind {kind!r}", line=lineno, offset=offset
                    )
            offset += len(line) + 1
        if tournament is None:
            raise JournalError("journal holds no init event", line=1, offset=0)
        tournament.journal_path = path
        return tournament

    # -- bracket ----------------------------------------------------------

    @property
    def total_pairings(self) -> int:
        return len(self.contenders) - 1

    @property
    def complete(self) -> bool:
        return self._current_pending() is None and self._next_challenger >= len(self.contenders)

    @property
    def champion(self) -> Contender:
        return self._champion

    def _current_pending(self) -> Pairing | None:
        if self.pairings and not self.pairings[-1].resolved:
            return self.pairings[-1]
        return None

    def next_pairing(self) -> Pairing | None:
        """The open pairing, creating it if the ladder still has challengers.
        None once the bracket is complete."""
        pending = self._current_pending()
        if pending is not None:
            return pending
        if self._next_challenger >= len(self.contenders):
            return None
        pairing = Pairing(
            pairing_id=f"p{len(self.pairings) + 1:03d}",
            left=self._champion,
            right=self.contenders[self._next_challenger],
        )
        self._next_challenger += 1
        self.pairings.append(pairing)
        return pairing

    def _find(self, pairing_id: str) -> Pairing | None:
        for pairing in self.pairings:
            if pairing.pairing_id == pairing_id:
                return pairing
        return None

    def record_verdict(self, pairing_id: str, verdict: str, rater: str = "anonymous") -> dict:
        """Resolve the open pairing, or attach an agreement rating to an
        already-resolved one (new raters only).  Anything else is stale."""
        if verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        pairing = self._find(pairing_id)
        if pairing is None:
            # a verdict may name the next ladder pairing before anyone asked
            # for it (journal replay does exactly this); materialise it
            would_be_next = (
                self._current_pending() is None
                and self._next_challenger < len(self.contenders)
                and pairing_id == f"p{len(self.pairings) + 1:03d}"
            )
            if would_be_next:
                pairing = self.next_pairing()
            else:
                raise StalePairingError(f"unknown pairing {pairing_id!r}")
        if pairing.resolved:
            if any(r == rater for r, _ in pairing.ratings):
                raise StalePairingError(
                    f"rater {rater!r} already rated resolved pairing {pairing_id!r}"
                )
            pairing.ratings.append((rater, verdict))
            self._append(
                {"event": "rating", "pairing_id": pairing_id, "verdict": verdict, "rater": rater}
            )
            return self.to_json()
        pairing.ratings.append((rater, verdict))
        winner = _winner(pairing, verdict)
        pairing.winner_id = winner.config_id
        self._champion = winner
        self._append(
            {"event": "verdict", "pairing_id": pairing_id, "verdict": verdict, "rater": rater}
        )
        return self.to_json()

    # -- agreement --------------------------------------------------------

    def agreement(self) -> dict:
        """Chance-corrected agreement over pairings holding at least two
        ratings, truncated to a common per-pairing rating count."""
        rated = [p for p in self.pairings if len(p.ratings) >= 2]
        if not rated:
            return {"kappa": None, "pairings_rated": 0, "ratings_per_pairing": 0}
        n = min(len(p.ratings) for p in rated)
        counts = []
        for pairing in rated:
            row = [0] * len(VERDICTS)
            for _, verdict in pairing.ratings[:n]:
                row[VERDICTS.index(verdict)] += 1
            counts.append(row)
        try:
            kappa = float(fleiss_kappa(counts))
        except DegenerateRatingsError:
            kappa = None
        return {"kappa": kappa, "pairings_rated": len(rated), "ratings_per_pairing": n}

    def to_json(self) -> dict:
        pending = self._current_pending()
        return {
            "contenders": [c.to_json() for c in self.contenders],
            "pairings": [p.to_json() for p in self.pairings],
            "resolved": sum(1 for p in self.pairings if p.resolved),
            "total_pairings": self.total_pairings,
            "pending_pairing_id": pending.pairing_id if pending else None,
            "champion_id": self._champion.config_id if self.complete else None,
            "complete": self.complete,
        }


def run_scripted(tournament: Tournament, judge, rater: str = "script") -> Contender:
    """Drive the ladder to completion with judge(pairing) -> verdict."""
    while True:
        pairing = tournament.next_pairing()
        if pairing is None:
            return tournament.champion
        tournament.record_verdict(pairing.pairing_id, judge(pairing), rater=rater)

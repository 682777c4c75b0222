"""Per-beam storage of early denoising latents and pool assembly.

Each beam owns a cache mapping step index -> the latents its trajectory
stored at that step.  Pools for step j draw the configured latent indices
from the last min(m, j-1) steps of *this* beam only, then append fresh-noise
entries seeded from (master, j, beam id, ordinal).  Pool order is donor step
ascending, latent index ascending, random entries last, so candidate
ordinals are reproducible.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .diffusion import LatentState, TrajectoryRecord, initial_noise
from .exceptions import EmptyHistoryError, MissingLatentError
from .schedule import NoiseSchedule
from .seeds import derive_seed

RANDOM_SEED = "RANDOM_SEED"


@dataclass(frozen=True)
class LatentRef:
    """Provenance of one candidate's starting point."""

    step_index: int
    beam_id: str
    latent_index: int | str
    donor_seed: int

    def __post_init__(self):
        if self.step_index < 1:
            raise ValueError(f"step_index must be >= 1, got {self.step_index}")
        if isinstance(self.latent_index, str) and self.latent_index != RANDOM_SEED:
            raise ValueError(f"latent_index must be an int or {RANDOM_SEED!r}")

    @property
    def is_random(self) -> bool:
        return self.latent_index == RANDOM_SEED

    def to_json(self) -> dict:
        return {
            "step_index": self.step_index,
            "beam_id": self.beam_id,
            "latent_index": self.latent_index,
            "donor_seed": self.donor_seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LatentRef":
        return cls(
            step_index=int(data["step_index"]),
            beam_id=str(data["beam_id"]),
            latent_index=(
                data["latent_index"]
                if data["latent_index"] == RANDOM_SEED
                else int(data["latent_index"])
            ),
            donor_seed=int(data["donor_seed"]),
        )


@dataclass(frozen=True)
class PoolEntry:
    ref: LatentRef
    state: LatentState


@dataclass(frozen=True)
class _StepLatents:
    beam_id: str
    seed: int
    latents: tuple[LatentState, ...]  # position = latent index


class BeamLatentCache:
    """Immutable-entry cache; children share their parent's recorded steps."""

    def __init__(self, steps: dict[int, _StepLatents] | None = None):
        self._steps: dict[int, _StepLatents] = dict(steps or {})

    def child(self) -> "BeamLatentCache":
        return BeamLatentCache(self._steps)

    def recorded_steps(self) -> list[int]:
        return sorted(self._steps)

    def record_trajectory(
        self,
        beam_id: str,
        step_index: int,
        record: TrajectoryRecord,
        latent_indices: tuple[int, ...],
    ) -> tuple[LatentRef, ...]:
        """Store the record's latents for this step; returns refs for the
        requested indices.  Raises if the record does not cover them all."""
        if step_index < 1:
            raise ValueError(f"step_index must be >= 1, got {step_index}")
        available = len(record.stored_latents)
        missing = [k for k in latent_indices if not 0 <= k < available]
        if missing:
            raise MissingLatentError(
                f"trajectory stored {available} latents; indices {missing} not covered"
            )
        self._steps[step_index] = _StepLatents(
            beam_id=beam_id, seed=record.seed, latents=record.stored_latents
        )
        return tuple(
            LatentRef(
                step_index=step_index,
                beam_id=beam_id,
                latent_index=k,
                donor_seed=record.seed,
            )
            for k in latent_indices
        )

    def retain_from(self, min_step: int) -> None:
        """Drop steps older than min_step (history beyond max m is dead)."""
        for step in [s for s in self._steps if s < min_step]:
            del self._steps[step]

    def gather_latent_pool(
        self,
        beam_id: str,
        j: int,
        m: int,
        latent_indices: tuple[int, ...],
        n_random: int,
        master_seed: int,
        d: int,
        schedule: NoiseSchedule,
    ) -> tuple[PoolEntry, ...]:
        """Candidate starting points for step j."""
        if j < 2:
            raise EmptyHistoryError(f"no prior steps exist at j={j}")
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        if not latent_indices:
            raise ValueError("latent_indices must be nonempty")
        donor_steps = range(max(1, j - m), j)
        entries: list[PoolEntry] = []
        for step in donor_steps:
            if step not in self._steps:
                raise EmptyHistoryError(f"beam {beam_id!r} has no trajectory at step {step}")
            stored = self._steps[step]
            for k in sorted(latent_indices):
                if k >= len(stored.latents):
                    raise MissingLatentError(
                        f"step {step} stored {len(stored.latents)} latents; index {k} missing"
                    )
                entries.append(
                    PoolEntry(
                        ref=LatentRef(
                            step_index=step,
                            beam_id=stored.beam_id,
                            latent_index=k,
                            donor_seed=stored.seed,
                        ),
                        state=stored.latents[k],
                    )
                )
        for ordinal in range(n_random):
            seed = derive_seed(master_seed, j, beam_id, ordinal)
            entries.append(
                PoolEntry(
                    ref=LatentRef(
                        step_index=j,
                        beam_id=beam_id,
                        latent_index=RANDOM_SEED,
                        donor_seed=seed,
                    ),
                    state=initial_noise(seed, d, schedule),
                )
            )
        return tuple(entries)


def pool_size(j: int, m: int, n_latents: int, n_random: int) -> int:
    """|pool| = min(m, j-1) * |latent_indices| + n_random."""
    return min(m, j - 1) * n_latents + n_random


@dataclass(frozen=True)
class ProvenanceRow:
    category: str
    selections: int
    opportunities: int

    @property
    def rate_pct(self) -> float:
        if self.opportunities == 0:
            return 0.0
        return 100.0 * self.selections / self.opportunities


def provenance_stats(
    paths: list[list[LatentRef]],
    m: int,
    latent_indices: tuple[int, ...],
    n_random: int,
) -> list[ProvenanceRow]:
    """Selection rates over finalized paths, by donor step (absolute and as an
    offset from the choosing step), by latent index, and for the random-seed
    option.  Opportunities count the steps (j >= 2) where each option was in
    the pool; step-1 refs carry no donor competition and are ignored."""
    sel: dict[str, int] = {}
    opp: dict[str, int] = {}

    def bump(table: dict[str, int], key: str) -> None:
        table[key] = table.get(key, 0) + 1

    max_len = max((len(path) for path in paths), default=0)
    categories: list[str] = []
    categories += [f"donor_step_{s}" for s in range(1, max(max_len, 1))]
    categories += [f"offset_{o}" for o in range(1, m + 1)]
    categories += [f"latent_{k}" for k in sorted(latent_indices)]
    categories.append(RANDOM_SEED.lower())

    # Paths list one chosen ref per step, in step order starting at 1;
    # random refs carry the choosing step, donor refs the donor step.
    for path in paths:
        for j, ref in enumerate(path, start=1):
            if j < 2:
                continue
            for s in range(max(1, j - m), j):
                bump(opp, f"donor_step_{s}")
                bump(opp, f"offset_{j - s}")
            for k in latent_indices:
                bump(opp, f"latent_{k}")
            if n_random >= 1:
                bump(opp, RANDOM_SEED.lower())
            if ref.is_random:
                bump(sel, RANDOM_SEED.lower())
            else:
                bump(sel, f"donor_step_{ref.step_index}")
                bump(sel, f"offset_{j - ref.step_index}")
                bump(sel, f"latent_{ref.latent_index}")

    return [
        ProvenanceRow(category=cat, selections=sel.get(cat, 0), opportunities=opp.get(cat, 0))
        for cat in categories
    ]


def provenance_csv(rows: list[ProvenanceRow]) -> str:
    buf = io.StringIO()
    buf.write("category,selections,opportunities,rate_pct\n")
    for row in rows:
        buf.write(f"{row.category},{row.selections},{row.opportunities},{row.rate_pct:.1f}\n")
    return buf.getvalue()

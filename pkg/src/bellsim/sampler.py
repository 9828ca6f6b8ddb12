"""Seeded Monte Carlo generation of trial-by-trial experiment records.

Reproducibility contract
------------------------
Trials are generated in fixed-size blocks.  The random stream of block
``j`` of setting pair ``i`` comes from a Philox counter-based bit
generator keyed by ``SeedSequence(entropy=seed, spawn_key=(i, j))``, so
the counts depend only on ``(seed, pair index, block index)`` and never
on how blocks are scheduled across workers.  Within a block the draw
order is fixed:

* SLHV source: one uniform per trial for the hidden variable (inverse
  CDF over the weights), then one for party 1's outcome, then one for
  party 2's.
* QM source: one uniform per trial for each photon's detection
  (probability ``eta_k * f_k``), then one resolving party 1's outcome
  (or the joint outcome cell when both photons were detected), then one
  resolving party 2's outcome when only photon 2 was detected.

Only ``Generator.random`` is used, keeping the mapping from bit stream
to outcomes entirely in this module.  Block results are integer count
tables, so the reduction over blocks is exact in any order; we still
sum in block order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import PAIR_LABELS, SettingsQuad
from .estimator import CountsRecord
from .model import OUTCOME_VALUES, SLHVModel, ValidationError
from .qm import QMModelParams

__all__ = [
    "BLOCK_SIZE",
    "ExperimentPlan",
    "ExperimentResult",
    "substream",
    "sample_slhv_trial",
    "sample_qm_trial",
    "run_experiment",
    "write_counts_csv",
    "write_run_sidecar",
]

BLOCK_SIZE = 1 << 16

# Column index of each outcome value in count tables, matching the
# (p_plus, p_minus, p_zero) column order of response tables.
_OUTCOME_INDEX = {1: 0, -1: 1, 0: 2}


@dataclass(frozen=True)
class ExperimentPlan:
    """One CHSH run: four setting pairs, emitted pairs per setting, seed."""

    quad: SettingsQuad
    trials_per_pair: int
    seed: int

    def __post_init__(self):
        if int(self.trials_per_pair) < 1:
            raise ValidationError(
                f"trials_per_pair must be >= 1, got {self.trials_per_pair!r}")
        object.__setattr__(self, "trials_per_pair", int(self.trials_per_pair))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[CountsRecord, ...]
    plan: ExperimentPlan
    source_summary: dict

    @property
    def emitted_per_pair(self) -> int:
        return self.plan.trials_per_pair


def substream(seed: int, pair_index: int, block_index: int) -> np.random.Generator:
    """The documented (seed, pair, block) -> bit stream derivation."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(int(pair_index), int(block_index)))
    return np.random.Generator(np.random.Philox(ss))


def _lambda_cdf(model: SLHVModel) -> np.ndarray:
    cdf = np.cumsum(model.space.weights)
    cdf[-1] = max(cdf[-1], 1.0)  # guard the top bin against rounding
    return cdf


def _categorical_rows(tables: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Outcome column index per trial from per-trial (3,) probability rows."""
    c0 = tables[:, 0]
    c1 = c0 + tables[:, 1]
    return np.where(u < c0, 0, np.where(u < c1, 1, 2))


def _slhv_block(model: SLHVModel, t1: np.ndarray, t2: np.ndarray,
                cdf: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """3x3 outcome counts for n trials; t1/t2 are the per-point triples."""
    lam = np.searchsorted(cdf, rng.random(n), side="right")
    np.clip(lam, 0, cdf.size - 1, out=lam)
    r_idx = _categorical_rows(t1[lam], rng.random(n))
    q_idx = _categorical_rows(t2[lam], rng.random(n))
    counts = np.bincount(r_idx * 3 + q_idx, minlength=9)
    return counts.reshape(3, 3)


def _qm_block(params: QMModelParams, a: float, b: float,
              rng: np.random.Generator, n: int) -> np.ndarray:
    d1 = rng.random(n) < params.eta1 * params.f1
    d2 = rng.random(n) < params.eta2 * params.f2
    u1 = rng.random(n)
    u2 = rng.random(n)

    fc = params.F * np.cos(2.0 * (a - b))
    p_same = 0.25 * (1.0 + fc)   # (+,+) and (-,-) given both detected
    p_diff = 0.25 * (1.0 - fc)
    # Joint cells in order (+,+), (+,-), (-,+), (-,-).
    edges = np.cumsum([p_same, p_diff, p_diff])

    r_idx = np.full(n, 2, dtype=np.intp)
    q_idx = np.full(n, 2, dtype=np.intp)

    both = d1 & d2
    cell = np.searchsorted(edges, u1[both], side="right")
    r_idx[both] = cell // 2
    q_idx[both] = cell % 2

    only1 = d1 & ~d2
    r_idx[only1] = (u1[only1] >= 0.5).astype(np.intp)
    only2 = d2 & ~d1
    q_idx[only2] = (u2[only2] >= 0.5).astype(np.intp)

    counts = np.bincount(r_idx * 3 + q_idx, minlength=9)
    return counts.reshape(3, 3)


def sample_slhv_trial(model: SLHVModel, a: float, b: float,
                      rng: np.random.Generator) -> tuple[int, int]:
    """One trial from an SLHV model: draw lambda, then each party's outcome."""
    cdf = _lambda_cdf(model)
    lam = min(int(np.searchsorted(cdf, rng.random(), side="right")), cdf.size - 1)
    t1 = model.triples(1, a)[lam]
    t2 = model.triples(2, b)[lam]
    r = OUTCOME_VALUES[int(_categorical_rows(t1[None, :], np.array([rng.random()]))[0])]
    q = OUTCOME_VALUES[int(_categorical_rows(t2[None, :], np.array([rng.random()]))[0])]
    return r, q


def sample_qm_trial(params: QMModelParams, a: float, b: float,
                    rng: np.random.Generator) -> tuple[int, int]:
    """One trial from the QM source, same branch logic as the block path."""
    counts = _qm_block(params, a, b, rng, 1)
    idx = int(np.argwhere(counts.reshape(-1) == 1)[0, 0])
    return OUTCOME_VALUES[idx // 3], OUTCOME_VALUES[idx % 3]


def _source_summary(source) -> dict:
    if isinstance(source, QMModelParams):
        return {"kind": "qm", "eta1": source.eta1, "eta2": source.eta2,
                "f1": source.f1, "f2": source.f2, "F": source.F}
    return {"kind": "slhv", "n_lambda": source.space.size,
            **{k: v for k, v in source.meta.items()
               if isinstance(v, (str, int, float, bool))}}


def run_experiment(source: SLHVModel | QMModelParams, plan: ExperimentPlan,
                   workers: int = 1) -> ExperimentResult:
    """Tally 3x3 outcome counts for each of the four setting pairs.

    The result is bit-identical for any ``workers`` value; see the
    module docstring for the substream derivation.
    """
    n = plan.trials_per_pair
    n_blocks = (n + BLOCK_SIZE - 1) // BLOCK_SIZE

    pair_prep = []
    for pair_index, (label, a, b, _sign) in enumerate(plan.quad.pairs()):
        if isinstance(source, SLHVModel):
            t1 = source.triples(1, a)
            t2 = source.triples(2, b)
            cdf = _lambda_cdf(source)
            pair_prep.append((label, a, b, ("slhv", t1, t2, cdf)))
        else:
            pair_prep.append((label, a, b, ("qm",)))

    def block_counts(pair_index: int, block_index: int) -> np.ndarray:
        label, a, b, prep = pair_prep[pair_index]
        size = min(BLOCK_SIZE, n - block_index * BLOCK_SIZE)
        rng = substream(plan.seed, pair_index, block_index)
        if prep[0] == "slhv":
            _, t1, t2, cdf = prep
            return _slhv_block(source, t1, t2, cdf, rng, size)
        return _qm_block(source, a, b, rng, size)

    tasks = [(i, j) for i in range(4) for j in range(n_blocks)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ij: block_counts(*ij), tasks))
    else:
        results = [block_counts(i, j) for i, j in tasks]

    records = []
    for pair_index, (label, a, b, _prep) in enumerate(pair_prep):
        table = np.zeros((3, 3), dtype=np.int64)
        for j in range(n_blocks):
            table += results[pair_index * n_blocks + j]
        records.append(CountsRecord(label=label, angles=(a, b), table=table,
                                    emitted_total=n))
    return ExperimentResult(records=tuple(records), plan=plan,
                            source_summary=_source_summary(source))


def write_counts_csv(records, path) -> None:
    """Fixed-order CSV: pair_label,r,q,count with all nine cells per pair."""
    def fmt(v: int) -> str:
        return f"{v:+d}" if v != 0 else "0"

    lines = ["pair_label,r,q,count"]
    for rec in records:
        for r in OUTCOME_VALUES:
            for q in OUTCOME_VALUES:
                c = int(rec.table[_OUTCOME_INDEX[r], _OUTCOME_INDEX[q]])
                lines.append(f"{rec.label},{fmt(r)},{fmt(q)},{c}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_run_sidecar(result: ExperimentResult, path) -> None:
    """JSON sidecar documenting the plan, seed and substream scheme."""
    doc = {
        "schema_version": 1,
        "quad_degrees": list(result.plan.quad.to_degrees()),
        "pair_labels": list(PAIR_LABELS),
        "trials_per_pair": result.plan.trials_per_pair,
        "seed": result.plan.seed,
        "source": result.source_summary,
        "rng": {
            "bit_generator": "Philox",
            "block_size": BLOCK_SIZE,
            "substream": "SeedSequence(entropy=seed, spawn_key=(pair_index, block_index))",
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")

"""Coincidence-counting estimators and the full-sample/effective split.

From a 3x3 outcome count table per setting pair this module computes
the effective (coincidence-normalized) correlation, the effective CHSH
value with a plug-in standard error, and, when the number of emitted
pairs is known, the bookkeeping that connects the full-sample CHSH
value U to the effective one:

    E(k, l)      = sum_rq r*q*N_rq / N_emitted
    E_eff(k, l)  = sum_rq r*q*N_rq / N_coincidence
    eps(k, l)    = E * (1 - sum P) / sum P        (so E = E_eff - eps)

Combining the per-pair eps terms with the CHSH signs gives eps_total
with U = U_eff - eps_total as an exact identity, and the shifted
interval (-2 + eps_total, 2 + eps_total) that an unviolated full-sample
CHSH implies for U_eff.  Real coincidence experiments cannot observe
N_emitted, so the eps analysis reports "unavailable" when the emitted
totals are missing rather than guessing.

Standard errors assume independent trials with plug-in binomial
variances; there is no correlated-systematics model, and reports label
them as such.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .bounds import PAIR_LABELS, PAIR_SIGNS
from .model import NoDataError, ValidationError
from .qm import QMModelParams

__all__ = [
    "CountsRecord",
    "coincidence_count",
    "e_eff_from_counts",
    "e_eff_stderr",
    "u_eff_from_counts",
    "EpsilonReport",
    "epsilon_decomposition",
    "qm_epsilon_identity",
    "read_counts_csv",
    "analysis_report",
]

_OUTCOME_INDEX = {1: 0, -1: 1, 0: 2}


@dataclass(frozen=True)
class CountsRecord:
    """Outcome counts for one setting pair.

    ``table`` is 3x3 over outcomes (+1, -1, 0) x (+1, -1, 0).
    ``emitted_total`` is the number of emitted pairs when known (only in
    simulation or heralded data); when known it must equal the table
    sum.  ``nondetect_split_known`` is False when single-detection rows
    were not observed and the remainder was lumped into the (0, 0) cell
    for bookkeeping.
    """

    label: str
    table: np.ndarray
    angles: tuple[float, float] | None = None
    emitted_total: int | None = None
    nondetect_split_known: bool = True

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.shape != (3, 3):
            raise ValidationError(
                f"counts table must be 3x3, got shape {t.shape}")
        if np.any(t < 0):
            raise ValidationError("counts must be nonnegative")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        if self.emitted_total is not None:
            total = int(t.sum())
            if total != int(self.emitted_total):
                raise ValidationError(
                    f"table sum {total} != emitted_total {self.emitted_total} "
                    f"for pair {self.label!r}")
            object.__setattr__(self, "emitted_total", int(self.emitted_total))


def coincidence_count(rec: CountsRecord) -> int:
    """Trials in which both photons were detected."""
    return int(rec.table[:2, :2].sum())


def _signed_coincidence_sum(rec: CountsRecord) -> int:
    t = rec.table
    return int(t[0, 0] - t[0, 1] - t[1, 0] + t[1, 1])


def e_eff_from_counts(rec: CountsRecord) -> float:
    """Effective correlation: mean of r*q over coincidences only."""
    n_c = coincidence_count(rec)
    if n_c == 0:
        raise NoDataError(f"no coincidences recorded for pair {rec.label!r}")
    return _signed_coincidence_sum(rec) / n_c


def e_eff_stderr(rec: CountsRecord) -> float:
    """Plug-in binomial standard error of the effective correlation."""
    n_c = coincidence_count(rec)
    if n_c == 0:
        raise NoDataError(f"no coincidences recorded for pair {rec.label!r}")
    e = _signed_coincidence_sum(rec) / n_c
    return math.sqrt(max(1.0 - e * e, 0.0) / n_c)


def _ordered(recs) -> list[CountsRecord]:
    recs = list(recs)
    by_label = {r.label: r for r in recs}
    if sorted(by_label) != sorted(PAIR_LABELS) or len(recs) != 4:
        raise ValidationError(
            f"need exactly the four pairs {PAIR_LABELS}, got "
            f"{[r.label for r in recs]}")
    return [by_label[lab] for lab in PAIR_LABELS]


def u_eff_from_counts(recs) -> tuple[float, float]:
    """Effective CHSH value and its standard error from four records.

    Per-pair errors are treated as independent and combined in
    quadrature.
    """
    ordered = _ordered(recs)
    u_eff = sum(s * e_eff_from_counts(r) for s, r in zip(PAIR_SIGNS, ordered))
    var = sum(e_eff_stderr(r) ** 2 for r in ordered)
    return float(u_eff), math.sqrt(var)


@dataclass(frozen=True)
class EpsilonReport:
    """Per-pair and combined full-sample/effective discrepancies.

    ``eps_total`` carries the CHSH signs (minus on the ab' term), which
    is what makes ``u == u_eff - eps_total`` an exact identity.
    ``interval`` is (-2 + eps_total, 2 + eps_total): the range an
    unviolated full-sample CHSH leaves for the effective value.
    """

    eps: dict[str, float]
    eps_total: float
    e: dict[str, float]
    e_eff: dict[str, float]
    coincidence_fraction: dict[str, float]
    u: float
    u_eff: float
    interval: tuple[float, float]
    u_eff_in_interval: bool


def epsilon_decomposition(recs) -> EpsilonReport:
    """Full-sample vs effective bookkeeping; needs emitted totals.

    Raises when any record lacks ``emitted_total``: without the number
    of emitted pairs the full-sample correlations, and hence eps, cannot
    be determined from coincidence data.
    """
    ordered = _ordered(recs)
    for r in ordered:
        if r.emitted_total is None:
            raise NoDataError(
                f"eps cannot be determined for pair {r.label!r}: the number "
                "of emitted pairs is unknown (coincidence-only data)")
    eps: dict[str, float] = {}
    e: dict[str, float] = {}
    e_eff: dict[str, float] = {}
    frac: dict[str, float] = {}
    u = 0.0
    u_eff = 0.0
    eps_total = 0.0
    for sign, rec in zip(PAIR_SIGNS, ordered):
        n_c = coincidence_count(rec)
        if n_c == 0:
            raise NoDataError(f"no coincidences recorded for pair {rec.label!r}")
        sp = n_c / rec.emitted_total
        e[rec.label] = _signed_coincidence_sum(rec) / rec.emitted_total
        e_eff[rec.label] = _signed_coincidence_sum(rec) / n_c
        eps[rec.label] = e[rec.label] * (1.0 - sp) / sp
        frac[rec.label] = sp
        u += sign * e[rec.label]
        u_eff += sign * e_eff[rec.label]
        eps_total += sign * eps[rec.label]
    interval = (-2.0 + eps_total, 2.0 + eps_total)
    return EpsilonReport(eps=eps, eps_total=float(eps_total), e=e, e_eff=e_eff,
                         coincidence_fraction=frac, u=float(u),
                         u_eff=float(u_eff), interval=interval,
                         u_eff_in_interval=interval[0] <= u_eff <= interval[1])


def qm_epsilon_identity(params: QMModelParams, u_eff: float) -> float:
    """The discrepancy the QM model predicts: (1 - eta1*eta2*f12) * u_eff.

    Equivalently, the full-sample CHSH value is eta1*eta2*f12 * u_eff,
    which stays within 2 whenever sqrt(2)*F*eta1*eta2*f12 <= 1.
    """
    return (1.0 - params.eta12f12) * u_eff


def read_counts_csv(path, emitted_totals: dict[str, int] | None = None
                    ) -> list[CountsRecord]:
    """Read the sampler CSV schema, or a coincidence-only variant.

    Files with non-detection rows (r or q equal to 0) yield records with
    ``emitted_total`` set to the table sum.  Coincidence-only files get
    ``emitted_total=None`` unless ``emitted_totals`` supplies per-pair
    values, in which case the unobserved remainder is lumped into the
    (0, 0) cell and ``nondetect_split_known`` is False.
    """
    tables: dict[str, np.ndarray] = {}
    saw_nondetect: dict[str, bool] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"pair_label", "r", "q", "count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValidationError(
                f"counts CSV must have header columns {sorted(required)}, "
                f"got {reader.fieldnames}")
        for row in reader:
            label = row["pair_label"].strip()
            try:
                r = int(row["r"])
                q = int(row["q"])
                c = int(row["count"])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad counts row {row!r}") from exc
            if r not in _OUTCOME_INDEX or q not in _OUTCOME_INDEX:
                raise ValidationError(
                    f"outcomes must be in (+1, -1, 0), got {(r, q)}")
            if c < 0:
                raise ValidationError(f"negative count in row {row!r}")
            t = tables.setdefault(label, np.zeros((3, 3), dtype=np.int64))
            t[_OUTCOME_INDEX[r], _OUTCOME_INDEX[q]] += c
            if r == 0 or q == 0:
                saw_nondetect[label] = True
    if not tables:
        raise ValidationError(f"counts CSV {path!r} contains no data rows")

    records = []
    for label, t in tables.items():
        if saw_nondetect.get(label, False):
            records.append(CountsRecord(label=label, table=t,
                                        emitted_total=int(t.sum())))
        elif emitted_totals is not None and label in emitted_totals:
            total = int(emitted_totals[label])
            n_obs = int(t.sum())
            if total < n_obs:
                raise ValidationError(
                    f"emitted total {total} for pair {label!r} is below the "
                    f"observed count {n_obs}")
            t = t.copy()
            t[2, 2] = total - n_obs
            records.append(CountsRecord(label=label, table=t,
                                        emitted_total=total,
                                        nondetect_split_known=False))
        else:
            records.append(CountsRecord(label=label, table=t))
    return records


def analysis_report(recs, params: QMModelParams | None = None) -> dict:
    """JSON-ready analysis of four counts records.

    ``epsilon`` degrades to the string "unavailable" when emitted totals
    are missing.  When QM parameters are supplied, the predicted
    discrepancy is included for comparison.
    """
    ordered = _ordered(recs)
    u_eff, stderr = u_eff_from_counts(ordered)
    per_pair = {}
    for rec in ordered:
        per_pair[rec.label] = {
            "E_eff": e_eff_from_counts(rec),
            "stderr": e_eff_stderr(rec),
            "coincidences": coincidence_count(rec),
        }
    report: dict = {
        "schema_version": 1,
        "per_pair": per_pair,
        "U_eff": u_eff,
        "stderr": stderr,
        "error_model": "independent trials, plug-in binomial variances",
    }
    try:
        eps = epsilon_decomposition(ordered)
        report["epsilon"] = {
            "per_pair": dict(eps.eps),
            "total": eps.eps_total,
            "U": eps.u,
            "interval": list(eps.interval),
            "U_eff_in_interval": eps.u_eff_in_interval,
            "nondetect_split_known": all(r.nondetect_split_known for r in ordered),
        }
        report["verdicts"] = {
            "abs_u_eff_le_2": abs(u_eff) <= 2.0,
            "abs_u_le_2": abs(eps.u) <= 2.0,
        }
    except NoDataError as exc:
        report["epsilon"] = "unavailable"
        report["epsilon_unavailable_reason"] = str(exc)
        report["verdicts"] = {"abs_u_eff_le_2": abs(u_eff) <= 2.0}
    if params is not None:
        report["qm_predicted_epsilon"] = qm_epsilon_identity(params, u_eff)
    return report

"""Stochastic local-hidden-variable (SLHV) models with non-detection.

A model consists of a discrete hidden-variable space (points ``lambda_i``
with weights ``rho_i`` summing to one) and one response function per
party.  A response function maps an analyzer angle and a hidden-variable
point to a probability triple over the three single-photon outcomes

    +1 (transmitted channel), -1 (reflected channel), 0 (not detected).

Locality is structural: there is no joint response function anywhere in
the type, so joint outcome probabilities can only ever be formed as
products of the two single-party triples.

Angles are polarizer transmission-axis angles in radians, canonical on
``[0, pi)`` (polarizer settings are pi-periodic, so all trigonometry in
this package uses ``cos 2(.)``).

Conventions used throughout:

* ``alpha(angle, lam) = p_plus + p_minus`` is the detection probability
  of party 1 at the hidden level (``beta`` for party 2); it equals
  ``1 - p_zero``.
* ``local_average = p_plus - p_minus`` is the hidden-level single-party
  average of the +-1 outcomes (non-detections count as 0).
* ``effective_local_average = (p_plus - p_minus) / (p_plus + p_minus)``
  is the average over the detected subset only; it is bounded by 1 in
  magnitude whenever the photon is detectable at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "OUTCOME_VALUES",
    "NORMALIZATION_TOL",
    "VALIDATOR_TOL",
    "BellSimError",
    "ValidationError",
    "DegenerateModelError",
    "AssumptionError",
    "TheoremViolationError",
    "NoDataError",
    "canonical_angle",
    "ProbTriple",
    "HiddenVariableSpace",
    "ResponseFunction",
    "SLHVModel",
    "AssumptionReport",
    "validate_solution1",
    "validate_solution2",
    "uniform_lambda_grid",
]

# Single-photon outcomes in canonical column order: detected +1, detected -1,
# not detected.  Every (n, 3) table in this package uses this order.
OUTCOME_VALUES = (1, -1, 0)

# Pure-arithmetic tolerance (probability normalization, factorization).
NORMALIZATION_TOL = 1e-12
# Assumption validators allow formula-defined models benign rounding room.
VALIDATOR_TOL = 1e-10


class BellSimError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(BellSimError, ValueError):
    """Input data violates a contract (non-normalized triples, bad schema)."""


class DegenerateModelError(BellSimError):
    """A quantity is undefined because a detection probability vanishes."""


class AssumptionError(BellSimError):
    """A computation's assumption validator failed and strict mode is on."""


class TheoremViolationError(BellSimError):
    """A bound that is a theorem for the model class was numerically broken.

    This never fires for a correct implementation; it exists as a tripwire.
    """


class NoDataError(BellSimError):
    """A counts record contains no coincidences to estimate from."""


def canonical_angle(angle: float) -> float:
    """Reduce a polarizer angle (radians) to the canonical range [0, pi)."""
    a = float(angle)
    if not math.isfinite(a):
        raise ValidationError(f"angle must be finite, got {angle!r}")
    r = a % math.pi
    # (-tiny) % pi can round up to exactly pi; fold it back to 0.
    return 0.0 if r >= math.pi else r


class ProbTriple(NamedTuple):
    """Single-photon outcome distribution (detected +1, detected -1, no detection)."""

    p_plus: float
    p_minus: float
    p_zero: float

    @property
    def alpha(self) -> float:
        """Detection probability, the sum over the two detected channels."""
        return self.p_plus + self.p_minus


def _check_triples(table: np.ndarray, party: int, angle: float,
                   tol: float = NORMALIZATION_TOL) -> np.ndarray:
    """Validate an (n, 3) probability table; returns it as float64."""
    t = np.asarray(table, dtype=float)
    if t.ndim != 2 or t.shape[1] != 3:
        raise ValidationError(
            f"response table for party {party} at angle {angle:.6g} must have "
            f"shape (n, 3), got {t.shape}")
    if not np.all(np.isfinite(t)):
        bad = int(np.argwhere(~np.isfinite(t).all(axis=1))[0, 0])
        raise ValidationError(
            f"non-finite probabilities (party {party}, angle {angle:.6g}, "
            f"lambda index {bad})")
    if np.any(t < -tol) or np.any(t > 1.0 + tol):
        bad = int(np.argwhere((t < -tol) | (t > 1.0 + tol))[0, 0])
        raise ValidationError(
            f"probability outside [0, 1] (party {party}, angle {angle:.6g}, "
            f"lambda index {bad})")
    sums = t.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValidationError(
            f"outcome probabilities do not sum to 1 (party {party}, angle "
            f"{angle:.6g}, lambda index {bad}, sum {sums[bad]!r})")
    return t


@dataclass(frozen=True)
class HiddenVariableSpace:
    """Discrete hidden-variable space: points with a normalized weight each.

    ``values`` carries a float label per point.  For grid-discretized
    models the label is the hidden angle itself; for tabulated models it
    is just the point index and response functions ignore it.
    """

    weights: np.ndarray
    values: np.ndarray

    def __init__(self, weights: Iterable[float], values: Iterable[float] | None = None):
        w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights,
                       dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("hidden-variable space needs at least one point")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("hidden-variable weights must be finite and >= 0")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(
                f"hidden-variable weights must sum to 1 (got {w.sum()!r})")
        v = (np.arange(w.size, dtype=float) if values is None
             else np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                             dtype=float))
        if v.shape != w.shape:
            raise ValidationError("values must have the same length as weights")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return int(self.weights.size)


def uniform_lambda_grid(n: int = 360) -> HiddenVariableSpace:
    """Equal-weight grid of n hidden angles covering [0, pi)."""
    if n < 1:
        raise ValidationError("grid needs at least one point")
    values = np.arange(n) * (math.pi / n)
    return HiddenVariableSpace(np.full(n, 1.0 / n), values)


class ResponseFunction:
    """Per-party outcome law: (angle, hidden point) -> probability triple.

    Three construction routes:

    * :meth:`from_function` wraps ``fn(angle, values) -> (n, 3)`` evaluated
      over the whole hidden-variable space at once.
    * :meth:`from_table` holds explicit triples for a fixed set of angles
      and rejects any other angle.
    * :meth:`from_split` composes an ideal two-outcome law with per-channel
      detection efficiencies: ``p_r = p_ideal_r * eff_r`` for r in {+1, -1}
      and ``p_zero`` is the remainder.
    """

    def __init__(self, party: int,
                 triples_fn: Callable[[float, np.ndarray], np.ndarray],
                 ideal_fn: Callable[[float, np.ndarray], np.ndarray] | None = None,
                 efficiency_fn: Callable[[float, np.ndarray, int], np.ndarray] | None = None):
        if party not in (1, 2):
            raise ValidationError(f"party must be 1 or 2, got {party!r}")
        self.party = party
        self._triples_fn = triples_fn
        self.ideal_fn = ideal_fn
        self.efficiency_fn = efficiency_fn

    @classmethod
    def from_function(cls, party: int,
                      fn: Callable[[float, np.ndarray], np.ndarray]) -> "ResponseFunction":
        return cls(party, fn)

    @classmethod
    def from_table(cls, party: int, tables: dict[float, np.ndarray],
                   angle_tol: float = 1e-9) -> "ResponseFunction":
        angles = np.array(sorted(canonical_angle(a) for a in tables))
        stacked = np.stack([np.asarray(tables[a], dtype=float)
                            for a in sorted(tables, key=canonical_angle)])

        def lookup(angle: float, values: np.ndarray) -> np.ndarray:
            a = canonical_angle(angle)
            # Wraparound metric: pi - eps and 0 are the same polarizer.
            raw = np.abs(angles - a)
            dist = np.minimum(raw, math.pi - raw)
            i = int(np.argmin(dist))
            if dist[i] > angle_tol:
                raise ValidationError(
                    f"tabulated response for party {party} has no entry for "
                    f"angle {a:.9g} rad (nearest {angles[i]:.9g})")
            return stacked[i]

        return cls(party, lookup)

    @classmethod
    def from_split(cls, party: int,
                   ideal_fn: Callable[[float, np.ndarray], np.ndarray],
                   efficiency_fn: Callable[[float, np.ndarray, int], np.ndarray]
                   ) -> "ResponseFunction":
        """Compose ideal responses with (possibly channel-dependent) efficiencies.

        ``ideal_fn(angle, values)`` returns an (n, 2) table over the two
        detected channels, each row summing to 1.  ``efficiency_fn(angle,
        values, r)`` returns per-point detection efficiencies in [0, 1]
        for channel r (+1 or -1).
        """

        def composed(angle: float, values: np.ndarray) -> np.ndarray:
            ideal = np.asarray(ideal_fn(angle, values), dtype=float)
            if ideal.ndim != 2 or ideal.shape[1] != 2:
                raise ValidationError(
                    f"ideal response for party {party} must have shape (n, 2)")
            if np.any(np.abs(ideal.sum(axis=1) - 1.0) > NORMALIZATION_TOL):
                raise ValidationError(
                    f"ideal response rows must sum to 1 (party {party}, "
                    f"angle {angle:.6g})")
            eff_plus = np.asarray(efficiency_fn(angle, values, +1), dtype=float)
            eff_minus = np.asarray(efficiency_fn(angle, values, -1), dtype=float)
            p_plus = ideal[:, 0] * eff_plus
            p_minus = ideal[:, 1] * eff_minus
            return np.column_stack([p_plus, p_minus, 1.0 - p_plus - p_minus])

        return cls(party, composed, ideal_fn=ideal_fn, efficiency_fn=efficiency_fn)

    def triples(self, angle: float, values: np.ndarray) -> np.ndarray:
        return self._triples_fn(canonical_angle(angle), values)


@dataclass(frozen=True)
class SLHVModel:
    """A stochastic local-hidden-variable model of one photon pair.

    Immutable after construction; every operation is a pure function of
    the model, so instances are safe to share across workers.
    """

    space: HiddenVariableSpace
    response1: ResponseFunction
    response2: ResponseFunction
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.response1.party != 1 or self.response2.party != 2:
            raise ValidationError("response functions must be for parties 1 and 2")

    def _response(self, party: int) -> ResponseFunction:
        if party == 1:
            return self.response1
        if party == 2:
            return self.response2
        raise ValidationError(f"party must be 1 or 2, got {party!r}")

    # -- vectorized surface (one angle, all hidden points at once) --------

    def triples(self, party: int, angle: float, validate: bool = True,
                tol: float = NORMALIZATION_TOL) -> np.ndarray:
        """Outcome probability table, shape (n, 3), columns (+1, -1, 0)."""
        t = self._response(party).triples(angle, self.space.values)
        if validate:
            t = _check_triples(t, party, canonical_angle(angle), tol=tol)
        else:
            t = np.asarray(t, dtype=float)
        return t

    def detection_probs(self, party: int, angle: float, validate: bool = True) -> np.ndarray:
        """alpha (or beta) per hidden point: probability of any detection."""
        t = self.triples(party, angle, validate=validate)
        return t[:, 0] + t[:, 1]

    def local_averages(self, party: int, angle: float, validate: bool = True) -> np.ndarray:
        """p_plus - p_minus per hidden point."""
        t = self.triples(party, angle, validate=validate)
        return t[:, 0] - t[:, 1]

    def nondetect_probs(self, party: int, angle: float, validate: bool = True) -> np.ndarray:
        t = self.triples(party, angle, validate=validate)
        return t[:, 2]

    # -- scalar surface (one hidden point) ---------------------------------

    def _check_index(self, lam: int) -> int:
        i = int(lam)
        if not 0 <= i < self.space.size:
            raise IndexError(
                f"lambda index {lam} out of range for space of size {self.space.size}")
        return i

    def response(self, party: int, angle: float, lam: int) -> ProbTriple:
        i = self._check_index(lam)
        t = self.triples(party, angle)
        return ProbTriple(float(t[i, 0]), float(t[i, 1]), float(t[i, 2]))

    def alpha(self, party: int, angle: float, lam: int) -> float:
        """Detection probability p_plus + p_minus at one hidden point."""
        t = self.response(party, angle, lam)
        return t.p_plus + t.p_minus

    def nondetect_prob(self, party: int, angle: float, lam: int) -> float:
        return self.response(party, angle, lam).p_zero

    def local_average(self, party: int, angle: float, lam: int) -> float:
        t = self.response(party, angle, lam)
        return t.p_plus - t.p_minus

    def effective_local_average(self, party: int, angle: float, lam: int) -> float:
        """Detected-subset average (p_plus - p_minus) / (p_plus + p_minus).

        The denominator equals 1 - p_zero by normalization; the sum form
        keeps |result| <= 1 exact in floating point.
        """
        t = self.response(party, angle, lam)
        denom = t.p_plus + t.p_minus
        if denom <= 0.0:
            raise DegenerateModelError(
                f"photon is never detected (party {party}, angle "
                f"{canonical_angle(angle):.6g}, lambda index {lam})")
        return (t.p_plus - t.p_minus) / denom

    def joint_prob(self, a: float, b: float, lam: int, r: int, q: int) -> float:
        """Product of the two single-party probabilities for outcomes (r, q)."""
        if r not in OUTCOME_VALUES or q not in OUTCOME_VALUES:
            raise ValidationError(f"outcomes must be in {OUTCOME_VALUES}, got {(r, q)}")
        t1 = self.response(1, a, lam)
        t2 = self.response(2, b, lam)
        return t1[OUTCOME_VALUES.index(r)] * t2[OUTCOME_VALUES.index(q)]


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of a non-detection assumption check.

    ``worst`` names the offending (party, lambda index, angle pair) when
    the check fails.  ``implied_p0`` is filled by the hidden-level /
    experiment-level consistency check: the single experimental
    non-detection probability per (party, angle) that the model implies
    when the check passes.
    """

    passed: bool
    max_deviation: float
    tol: float
    worst: tuple[int, int, tuple[float, float]] | None = None
    implied_p0: dict[int, dict[float, float]] | None = None

    def __bool__(self) -> bool:
        return self.passed


def _angle_lists(angles1: Sequence[float], angles2: Sequence[float] | None):
    a1 = [canonical_angle(a) for a in angles1]
    a2 = a1 if angles2 is None else [canonical_angle(a) for a in angles2]
    if not a1 or not a2:
        raise ValidationError("angle lists must be non-empty")
    return a1, a2


def validate_solution1(model: SLHVModel, angles1: Sequence[float],
                       angles2: Sequence[float] | None = None,
                       tol: float = VALIDATOR_TOL) -> AssumptionReport:
    """Check that non-detection is independent of the analyzer angle.

    For each party and each hidden point, the non-detection probability
    must agree (within ``tol``) across all supplied angles for that
    party.  This is the hidden-level assumption under which the
    coincidence rate is setting-independent and the detection-robust
    CHSH bound is provable.
    """
    a1, a2 = _angle_lists(angles1, angles2)
    worst_dev = 0.0
    worst = None
    for party, angs in ((1, a1), (2, a2)):
        p0 = np.stack([model.nondetect_probs(party, a) for a in angs])
        for i in range(len(angs)):
            for j in range(i + 1, len(angs)):
                dev = np.abs(p0[i] - p0[j])
                k = int(np.argmax(dev))
                if dev[k] > worst_dev:
                    worst_dev = float(dev[k])
                    worst = (party, k, (angs[i], angs[j]))
    passed = worst_dev <= tol
    return AssumptionReport(passed=passed, max_deviation=worst_dev, tol=tol,
                            worst=None if passed else worst)


def validate_solution2(model: SLHVModel, angles1: Sequence[float],
                       angles2: Sequence[float] | None = None,
                       tol: float = VALIDATOR_TOL) -> AssumptionReport:
    """Check that non-detection is constant across the hidden variable.

    This is the necessary condition for the hidden-level non-detection
    probabilities to equal the experimental ones.  On success the report
    carries the implied experimental non-detection probability per
    (party, angle); it is reported, never asserted against external data.
    """
    a1, a2 = _angle_lists(angles1, angles2)
    worst_dev = 0.0
    worst = None
    implied: dict[int, dict[float, float]] = {1: {}, 2: {}}
    for party, angs in ((1, a1), (2, a2)):
        for a in angs:
            p0 = model.nondetect_probs(party, a)
            spread = float(p0.max() - p0.min())
            if spread > worst_dev:
                worst_dev = spread
                worst = (party, int(np.argmax(p0)), (a, a))
            # Weighted mean is the implied experimental value; equals the
            # common constant when the check passes.
            implied[party][a] = float(np.sum(model.space.weights * p0))
    passed = worst_dev <= tol
    return AssumptionReport(passed=passed, max_deviation=worst_dev, tol=tol,
                            worst=None if passed else worst,
                            implied_p0=implied if passed else None)

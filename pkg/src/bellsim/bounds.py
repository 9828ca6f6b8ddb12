"""Exact CHSH-type quantities for discrete SLHV models.

Everything here is a finite weighted sum over the hidden-variable
points; no sampling.  The central objects:

* ``u = x(y - y') + x'(y + y')``, the CHSH combination of the four
  single-party averages at one hidden point.  On the box
  ``|x|, |x'| <= alpha``, ``|y|, |y'| <= beta`` its extreme values sit at
  the 16 sign vertices and equal +-2*alpha*beta.
* ``U``, the same combination of the full correlations
  ``E(a, b) = sum_i rho_i eps1(a, i) eps2(b, i)``; bounded by
  ``M = 2 * (coincidence probability)`` when non-detection is
  angle-independent, and by 2 for every SLHV model.
* ``U_eff``, the combination of coincidence-normalized correlations.
  Three assumption regimes make ``|U_eff| <= 2`` provable; the mode enum
  selects which hidden-level expression is used:

  - ``SOLUTION1``: divide each E by that pair's coincidence probability
    (valid when non-detection is angle-independent at the hidden level);
  - ``SOLUTION2``: divide E by the product of per-party experimental
    detection probabilities (valid when non-detection is constant across
    the hidden variable);
  - ``SOLUTION3``: average the product of detected-subset single-party
    averages directly (valid for any model without dead points).

All three agree with plain E in the ideal (no-loss) limit, and with one
another whenever non-detection is constant in both angle and lambda.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    AssumptionError,
    AssumptionReport,
    DegenerateModelError,
    SLHVModel,
    TheoremViolationError,
    ValidationError,
    canonical_angle,
    validate_solution1,
    validate_solution2,
)

__all__ = [
    "BOUND_TOL",
    "PAIR_LABELS",
    "PAIR_SIGNS",
    "SettingsQuad",
    "EffectiveCorrelationMode",
    "chsh_combination",
    "VertexRow",
    "enumerate_vertices",
    "correlation",
    "coincidence_probability",
    "pointwise_bound_check",
    "PointwiseBoundReport",
    "ChshValues",
    "chsh_value",
    "effective_correlation",
    "effective_chsh_value",
    "InequalityReport",
    "effective_chsh",
]

# Additive tolerance on inequality verdicts computed from exact sums.
BOUND_TOL = 1e-12

# The four setting pairs of a CHSH run, with the sign each correlation
# carries in the combination: E(a,b) - E(a,b') + E(a',b) + E(a',b').
PAIR_LABELS = ("ab", "ab'", "a'b", "a'b'")
PAIR_SIGNS = (1.0, -1.0, 1.0, 1.0)


@dataclass(frozen=True)
class SettingsQuad:
    """The four analyzer angles (a, a', b, b') of a CHSH run, radians."""

    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            object.__setattr__(self, name, canonical_angle(getattr(self, name)))

    @classmethod
    def from_degrees(cls, a, a_prime, b, b_prime) -> "SettingsQuad":
        return cls(*(math.radians(float(x)) for x in (a, a_prime, b, b_prime)))

    def to_degrees(self) -> tuple[float, float, float, float]:
        return tuple(math.degrees(x) for x in
                     (self.a, self.a_prime, self.b, self.b_prime))

    def pairs(self) -> tuple[tuple[str, float, float, float], ...]:
        """(label, angle1, angle2, sign) for the four setting pairs, in order."""
        return (
            ("ab", self.a, self.b, 1.0),
            ("ab'", self.a, self.b_prime, -1.0),
            ("a'b", self.a_prime, self.b, 1.0),
            ("a'b'", self.a_prime, self.b_prime, 1.0),
        )

    def party1_angles(self) -> tuple[float, float]:
        return (self.a, self.a_prime)

    def party2_angles(self) -> tuple[float, float]:
        return (self.b, self.b_prime)


def optimal_quad() -> SettingsQuad:
    """The quad with adjacent separations pi/8, maximizing the quantum value."""
    return SettingsQuad(0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


class EffectiveCorrelationMode(enum.Enum):
    """Which assumption regime backs the coincidence-normalized correlation."""

    SOLUTION1 = "solution1"
    SOLUTION2 = "solution2"
    SOLUTION3 = "solution3"

    @classmethod
    def from_string(cls, s: str) -> "EffectiveCorrelationMode":
        try:
            return cls(s.lower())
        except ValueError:
            raise ValidationError(
                f"unknown mode {s!r}; expected one of "
                f"{[m.value for m in cls]}") from None


def chsh_combination(x, x_prime, y, y_prime):
    """The CHSH combination x(y - y') + x'(y + y') of four averages.

    Pure Python arithmetic so exact number types (fractions.Fraction)
    pass through unchanged.
    """
    return x * (y - y_prime) + x_prime * (y + y_prime)


@dataclass(frozen=True)
class VertexRow:
    """One sign vertex of the box |x| <= alpha, ... and its u value."""

    row_index: int
    signs: tuple[int, int, int, int]
    x: object
    x_prime: object
    y: object
    y_prime: object
    u_value: object


# Sign vertices ordered by number of sign flips from the all-negative
# corner, ties in variable order (x, x', y, y').
_VERTEX_SIGNS = (
    (-1, -1, -1, -1),
    (+1, -1, -1, -1), (-1, +1, -1, -1), (-1, -1, +1, -1), (-1, -1, -1, +1),
    (+1, +1, -1, -1), (+1, -1, +1, -1), (+1, -1, -1, +1),
    (-1, +1, +1, -1), (-1, +1, -1, +1), (-1, -1, +1, +1),
    (+1, +1, +1, -1), (+1, +1, -1, +1), (+1, -1, +1, +1), (-1, +1, +1, +1),
    (+1, +1, +1, +1),
)


def enumerate_vertices(alpha, beta) -> list[VertexRow]:
    """All 16 sign vertices of u with equal per-party detection bounds.

    With |x|, |x'| capped by the same alpha and |y|, |y'| by the same
    beta, every vertex evaluates to +2*alpha*beta or -2*alpha*beta, so
    the linear function u is confined to [-2*alpha*beta, 2*alpha*beta].
    Exact for rational inputs (fractions.Fraction supported).
    """
    if not (0 <= alpha <= 1) or not (0 <= beta <= 1):
        raise ValidationError(
            f"detection bounds must lie in [0, 1], got alpha={alpha!r}, beta={beta!r}")
    rows = []
    for i, (sx, sxp, sy, syp) in enumerate(_VERTEX_SIGNS, start=1):
        x, xp = sx * alpha, sxp * alpha
        y, yp = sy * beta, syp * beta
        rows.append(VertexRow(row_index=i, signs=(sx, sxp, sy, syp),
                              x=x, x_prime=xp, y=y, y_prime=yp,
                              u_value=chsh_combination(x, xp, y, yp)))
    return rows


def correlation(model: SLHVModel, a: float, b: float, validate: bool = True) -> float:
    """Full-ensemble correlation: weighted sum of eps1(a) * eps2(b)."""
    e1 = model.local_averages(1, a, validate=validate)
    e2 = model.local_averages(2, b, validate=validate)
    return float(np.sum(model.space.weights * e1 * e2))


def coincidence_probability(model: SLHVModel, a: float, b: float,
                            validate: bool = True) -> float:
    """Probability that both photons are detected: weighted sum of alpha*beta."""
    al = model.detection_probs(1, a, validate=validate)
    be = model.detection_probs(2, b, validate=validate)
    return float(np.sum(model.space.weights * al * be))


@dataclass(frozen=True)
class PointwiseBoundReport:
    passed: bool
    max_slack: float
    worst_lambda: int
    tol: float


def pointwise_bound_check(model: SLHVModel, quad: SettingsQuad,
                          tol: float = BOUND_TOL) -> PointwiseBoundReport:
    """Verify |u| <= 2*alpha*beta at every hidden point.

    Only meaningful when non-detection is angle-independent (then the
    four per-party bounds collapse to a single alpha and beta per
    point); refuses otherwise.
    """
    rep = validate_solution1(model, quad.party1_angles(), quad.party2_angles())
    if not rep.passed:
        raise AssumptionError(
            "pointwise bound requires angle-independent non-detection; "
            f"validator failed with max deviation {rep.max_deviation:.3e}")
    x = model.local_averages(1, quad.a)
    xp = model.local_averages(1, quad.a_prime)
    y = model.local_averages(2, quad.b)
    yp = model.local_averages(2, quad.b_prime)
    alpha = model.detection_probs(1, quad.a)
    beta = model.detection_probs(2, quad.b)
    u = x * (y - yp) + xp * (y + yp)
    slack = np.abs(u) - 2.0 * alpha * beta
    k = int(np.argmax(slack))
    return PointwiseBoundReport(passed=bool(slack[k] <= tol),
                                max_slack=float(slack[k]), worst_lambda=k, tol=tol)


class ChshValues(tuple):
    """(u, m): the CHSH combination and its coincidence bound 2*sum(P)."""

    __slots__ = ()

    def __new__(cls, u: float, m: float):
        return super().__new__(cls, (u, m))

    @property
    def u(self) -> float:
        return self[0]

    @property
    def m(self) -> float:
        return self[1]


def chsh_value(model: SLHVModel, quad: SettingsQuad) -> ChshValues:
    """Full-ensemble CHSH value U and the coincidence bound M.

    |U| <= 2 holds for every SLHV model; |U| <= M additionally holds
    when non-detection is angle-independent.  Both are re-checked here
    and raise TheoremViolationError on numerical breach (a bug tripwire,
    not a reachable state).
    """
    u = sum(sign * correlation(model, x, y) for _, x, y, sign in quad.pairs())
    m = 2.0 * coincidence_probability(model, quad.a, quad.b)
    if abs(u) > 2.0 + BOUND_TOL:
        raise TheoremViolationError(
            f"|U| = {abs(u)!r} exceeds 2 for an SLHV model")
    if validate_solution1(model, quad.party1_angles(), quad.party2_angles()).passed \
            and abs(u) > m + BOUND_TOL:
        raise TheoremViolationError(
            f"|U| = {abs(u)!r} exceeds M = {m!r} despite angle-independent "
            "non-detection")
    return ChshValues(float(u), float(m))


def _marginal_nondetect(model: SLHVModel, party: int, angle: float,
                        validate: bool = True) -> float:
    """Experimental non-detection probability implied by the model."""
    p0 = model.nondetect_probs(party, angle, validate=validate)
    return float(np.sum(model.space.weights * p0))


def _effective_pair_value(model: SLHVModel, a: float, b: float,
                          mode: EffectiveCorrelationMode,
                          validate: bool = True) -> float:
    """One coincidence-normalized correlation, no assumption checking."""
    w = model.space.weights
    t1 = model.triples(1, a, validate=validate)
    t2 = model.triples(2, b, validate=validate)
    if mode is EffectiveCorrelationMode.SOLUTION3:
        al = t1[:, 0] + t1[:, 1]
        be = t2[:, 0] + t2[:, 1]
        if np.any(al <= 0.0) or np.any(be <= 0.0):
            party = 1 if np.any(al <= 0.0) else 2
            raise DegenerateModelError(
                f"detected-subset average undefined: party {party} has a "
                f"hidden point with zero detection probability")
        eff1 = (t1[:, 0] - t1[:, 1]) / al
        eff2 = (t2[:, 0] - t2[:, 1]) / be
        return float(np.sum(w * eff1 * eff2))
    e = float(np.sum(w * (t1[:, 0] - t1[:, 1]) * (t2[:, 0] - t2[:, 1])))
    if mode is EffectiveCorrelationMode.SOLUTION1:
        coin = float(np.sum(w * (t1[:, 0] + t1[:, 1]) * (t2[:, 0] + t2[:, 1])))
        if coin <= 0.0:
            raise DegenerateModelError(
                f"zero coincidence probability at pair ({a:.6g}, {b:.6g})")
        return e / coin
    if mode is EffectiveCorrelationMode.SOLUTION2:
        d1 = 1.0 - float(np.sum(w * t1[:, 2]))
        d2 = 1.0 - float(np.sum(w * t2[:, 2]))
        if d1 <= 0.0 or d2 <= 0.0:
            party = 1 if d1 <= 0.0 else 2
            raise DegenerateModelError(
                f"party {party} is never detected at its setting")
        return e / (d1 * d2)
    raise ValidationError(f"unknown mode {mode!r}")


def _mode_report(model: SLHVModel, quad: SettingsQuad,
                 mode: EffectiveCorrelationMode) -> AssumptionReport:
    a1, a2 = quad.party1_angles(), quad.party2_angles()
    if mode is EffectiveCorrelationMode.SOLUTION1:
        return validate_solution1(model, a1, a2)
    if mode is EffectiveCorrelationMode.SOLUTION2:
        return validate_solution2(model, a1, a2)
    # SOLUTION3 only needs nondegeneracy: every hidden point detectable.
    worst = 0.0
    where = None
    for party, angs in ((1, a1), (2, a2)):
        for ang in angs:
            p0 = model.nondetect_probs(party, ang)
            k = int(np.argmax(p0))
            if p0[k] > worst:
                worst = float(p0[k])
                where = (party, k, (ang, ang))
    passed = worst < 1.0
    return AssumptionReport(passed=passed, max_deviation=worst, tol=1.0,
                            worst=None if passed else where)


def effective_correlation(model: SLHVModel, a: float, b: float,
                          mode: EffectiveCorrelationMode = EffectiveCorrelationMode.SOLUTION1,
                          check_assumptions: bool = True) -> float:
    """Coincidence-normalized correlation for one setting pair.

    Per-pair preconditions: a positive coincidence probability (mode
    solution1), lambda-independent non-detection with both parties
    detectable (solution2), or no dead hidden point (solution3).
    ``check_assumptions=False`` skips the solution2 validator so the
    same expression can be evaluated on models that violate it (the
    adversarial-search workflow); degenerate denominators always raise.
    """
    if check_assumptions and mode is EffectiveCorrelationMode.SOLUTION2:
        rep = validate_solution2(model, [a], [b])
        if not rep.passed:
            raise AssumptionError(
                "validate_solution2 failed for mode solution2 "
                f"(max deviation {rep.max_deviation:.3e})")
    return _effective_pair_value(model, a, b, mode)


def effective_chsh_value(model: SLHVModel, quad: SettingsQuad,
                         mode: EffectiveCorrelationMode = EffectiveCorrelationMode.SOLUTION1,
                         validate: bool = True) -> float:
    """The CHSH combination of the four coincidence-normalized correlations.

    Lean path used in hot loops (property suites, adversarial search);
    no assumption checking, degenerate pairs raise.
    """
    return sum(sign * _effective_pair_value(model, x, y, mode, validate=validate)
               for _, x, y, sign in quad.pairs())


@dataclass(frozen=True)
class InequalityReport:
    """Everything the bound verification of one (model, quad, mode) produced.

    ``bound_guaranteed`` is True when the mode's assumption validator
    passed, in which case |u_eff| <= 2 is a theorem for this model;
    ``theorem_breach`` marks the impossible combination of a passing
    validator and a broken bound (always False for a correct
    implementation, surfaced for the CLI's exit-code contract).
    """

    quad_degrees: tuple[float, float, float, float]
    mode: EffectiveCorrelationMode
    e: dict[str, float]
    e_eff: dict[str, float]
    coincidence: dict[str, float]
    u: float
    m: float
    u_eff: float
    assumption_report: AssumptionReport
    bound_guaranteed: bool
    verdicts: dict[str, bool]
    theorem_breach: bool
    pointwise: PointwiseBoundReport | None = None
    per_lambda_extremes: dict[str, float] | None = None
    # Joint non-detection factorizes structurally for models; flagged so
    # data-side reports can state the opposite.
    p00_factorized: bool = True

    def to_json_dict(self, verbosity: int = 0) -> dict:
        def num(x):
            # Degenerate pairs leave NaN values; emit null, valid JSON.
            return None if isinstance(x, float) and math.isnan(x) else x

        d = {
            "schema_version": 1,
            "quad_degrees": list(self.quad_degrees),
            "mode": self.mode.value,
            "per_pair": {
                lab: {
                    "E": self.e[lab],
                    "E_eff": num(self.e_eff[lab]),
                    "coincidence_probability": self.coincidence[lab],
                }
                for lab in PAIR_LABELS
            },
            "U": self.u,
            "M": self.m,
            "U_eff": num(self.u_eff),
            "assumptions": {
                "passed": self.assumption_report.passed,
                "max_deviation": self.assumption_report.max_deviation,
                "tol": self.assumption_report.tol,
            },
            "bound_guaranteed": self.bound_guaranteed,
            "verdicts": dict(self.verdicts),
            "theorem_breach": self.theorem_breach,
            "p00_factorized": self.p00_factorized,
        }
        if self.assumption_report.implied_p0 is not None:
            d["assumptions"]["implied_p0"] = {
                str(party): {f"{math.degrees(a):.6g}": v for a, v in vals.items()}
                for party, vals in self.assumption_report.implied_p0.items()
            }
        if verbosity >= 1 and self.pointwise is not None:
            d["pointwise"] = {
                "passed": self.pointwise.passed,
                "max_slack": self.pointwise.max_slack,
                "worst_lambda": self.pointwise.worst_lambda,
            }
        if verbosity >= 2 and self.per_lambda_extremes is not None:
            d["per_lambda_extremes"] = dict(self.per_lambda_extremes)
        return d


def effective_chsh(model: SLHVModel, quad: SettingsQuad,
                   mode: EffectiveCorrelationMode = EffectiveCorrelationMode.SOLUTION1,
                   tol: float = BOUND_TOL) -> InequalityReport:
    """Full bound-verification report for one model, quad and mode.

    Always computes; when the mode's assumptions fail the report flags
    the bound as not guaranteed instead of refusing, so assumption-
    violating models (the adversarial workflow) still get their values.
    """
    e: dict[str, float] = {}
    e_eff: dict[str, float] = {}
    coin: dict[str, float] = {}
    u = 0.0
    u_eff = 0.0
    degenerate = None
    for label, x, y, sign in quad.pairs():
        e[label] = correlation(model, x, y)
        coin[label] = coincidence_probability(model, x, y)
        u += sign * e[label]
        try:
            e_eff[label] = _effective_pair_value(model, x, y, mode)
        except DegenerateModelError as exc:
            degenerate = exc
            e_eff[label] = math.nan
        if not math.isnan(e_eff[label]):
            u_eff += sign * e_eff[label]
    if degenerate is not None:
        u_eff = math.nan
    m = 2.0 * coin["ab"]

    assumption = _mode_report(model, quad, mode)
    bound_guaranteed = assumption.passed and degenerate is None

    pointwise = None
    if mode is EffectiveCorrelationMode.SOLUTION1 and assumption.passed:
        pointwise = pointwise_bound_check(model, quad, tol=tol)

    verdicts = {
        "abs_u_le_2": abs(u) <= 2.0 + tol,
        "abs_u_le_m": abs(u) <= m + tol,
        "abs_u_eff_le_2": (not math.isnan(u_eff)) and abs(u_eff) <= 2.0 + tol,
        "assumptions_passed": assumption.passed,
    }
    theorem_breach = bound_guaranteed and not verdicts["abs_u_eff_le_2"]

    x1 = model.local_averages(1, quad.a)
    extremes = {
        "max_abs_local_average_a": float(np.max(np.abs(x1))),
        "min_coincidence_probability": min(coin.values()),
        "max_coincidence_probability": max(coin.values()),
    }
    return InequalityReport(
        quad_degrees=quad.to_degrees(), mode=mode, e=e, e_eff=e_eff,
        coincidence=coin, u=float(u), m=float(m), u_eff=float(u_eff),
        assumption_report=assumption, bound_guaranteed=bound_guaranteed,
        verdicts=verdicts, theorem_breach=theorem_breach,
        pointwise=pointwise, per_lambda_extremes=extremes)

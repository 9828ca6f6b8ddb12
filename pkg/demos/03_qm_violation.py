"""Quantum predictions violate the bound regardless of detector quality.

The coincidence-normalized correlation predicted for a polarization-
entangled pair source is F*cos 2(a - b): the detector efficiency and
collimator factors cancel.  At the pi/8-separation quad the CHSH
combination of those correlations is 2*sqrt(2)*F, which exceeds 2 for
any F > 1/sqrt(2) -- parametric down-conversion sources reach F of
about 0.95.
"""

import math

from bellsim import qm
from bellsim.bounds import optimal_quad
from bellsim.qm import QMModelParams


def main():
    quad = optimal_quad()

    print("U_eff at the optimal quad vs source correlation strength F:")
    for F in (1.0, 0.95, 0.9, 1 / math.sqrt(2), 0.5):
        p = QMModelParams(1, 1, 1, 1, F)
        v = qm.effective_chsh_value(p, quad)
        mark = "violates" if v > 2 else "within bound"
        print(f"  F = {F:.4f}: U_eff = {v:.6f}  ({mark})")

    print("\nSweeping efficiencies at F = 0.95 (exact values):")
    print(f"  {'eta':>5} {'f12':>5} {'U_eff':>12} {'U (full sample)':>16}")
    for eta in (0.1, 0.5, 0.75, 1.0):
        for f12 in (0.25, 1.0):
            p = QMModelParams(eta, eta, f12, 1.0, 0.95)
            print(f"  {eta:>5} {f12:>5} {qm.effective_chsh_value(p, quad):>12.8f} "
                  f"{qm.chsh_value(p, quad):>16.8f}")
    print("\nU_eff is identical in every row: the violation survives any")
    print("detector, while the full-sample U shrinks with the losses and")
    print("stays comfortably below 2 at realistic efficiencies.")


if __name__ == "__main__":
    main()

"""What renormalizing away the lost pairs costs, made explicit.

The effective correlation divides by the coincidence rate; the per-pair
discrepancy eps = E * (1 - sum P) / (sum P) measures exactly how much
that renormalization injects.  Combining the four pairs with the CHSH
signs gives U = U_eff - eps, so an unviolated full-sample CHSH only
constrains U_eff to the shifted interval (-2 + eps, 2 + eps).  For the
quantum predictions eps = (1 - eta^2 f12) * U_eff, which is why real
lossy experiments can show U_eff near 2.7 while their (unobservable)
full-sample U sits far inside the classical range.
"""

import itertools
import math

import numpy as np

from bellsim import qm
from bellsim.bounds import optimal_quad
from bellsim.estimator import epsilon_decomposition
from bellsim.qm import QMModelParams
from bellsim.sampler import ExperimentPlan, run_experiment


def main():
    quad = optimal_quad()
    print(f"{'eta':>5} {'f12':>5} {'U_eff':>8} {'eps':>8} {'U':>8} "
          f"{'interval for U_eff':>20} {'cap':>7}")
    for i, (eta, f12) in enumerate(itertools.product((0.3, 0.5, 0.75), (0.5, 1.0))):
        params = QMModelParams(eta, eta, f12, 1.0, 0.95)
        n = int(math.ceil(3e4 / params.eta12f12))
        seed = int(np.random.SeedSequence(entropy=66, spawn_key=(i,)).
                   generate_state(1)[0])
        res = run_experiment(params, ExperimentPlan(quad, n, seed=seed))
        rep = epsilon_decomposition(res.records)
        cap = qm.u_eff_cap(params)
        print(f"{eta:>5} {f12:>5} {rep.u_eff:>8.4f} {rep.eps_total:>8.4f} "
              f"{rep.u:>8.4f} ({rep.interval[0]:>7.4f}, {rep.interval[1]:>7.4f})"
              f" {cap:>7.2f}")
    print("\nEvery row: U_eff lands inside its shifted interval, |U| <= 2,")
    print("and U_eff stays far below the 2/(eta^2 f12) cap. The violation")
    print("of 2 by U_eff is not a CHSH violation of the full ensemble; it")
    print("is only inexplicable for a local model if non-detection cannot")
    print("react to the analyzer settings.")


if __name__ == "__main__":
    main()

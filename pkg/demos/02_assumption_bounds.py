"""The coincidence-normalized CHSH bound under each assumption regime.

Draw random lossy local models built to satisfy one assumption each:

  solution1: non-detection independent of the analyzer angle,
  solution2: non-detection constant across the hidden variable,
  solution3: no assumption beyond every hidden point being detectable,

and confirm that the coincidence-normalized CHSH value never exceeds 2,
however hard the model tries.  A deterministic sign-responder with
perfect detection saturates the bound exactly.
"""

import numpy as np

from bellsim.bounds import (
    EffectiveCorrelationMode,
    chsh_value,
    effective_chsh_value,
    optimal_quad,
)
from bellsim.model import uniform_lambda_grid, ResponseFunction, SLHVModel
from bellsim.random_models import (
    random_angle_independent_model,
    random_lambda_independent_model,
    random_nondegenerate_model,
    random_quad,
)


def saturating_model():
    space = uniform_lambda_grid(720)

    def resp(party):
        def fn(angle, lam):
            c = np.cos(2.0 * (angle - lam))
            return np.column_stack([(c >= 0) * 1.0, (c < 0) * 1.0,
                                    np.zeros(lam.size)])
        return ResponseFunction.from_function(party, fn)

    return SLHVModel(space, resp(1), resp(2))


def main():
    rng = np.random.default_rng(2)
    generators = {
        EffectiveCorrelationMode.SOLUTION1: random_angle_independent_model,
        EffectiveCorrelationMode.SOLUTION2: random_lambda_independent_model,
        EffectiveCorrelationMode.SOLUTION3: random_nondegenerate_model,
    }
    n_models, n_quads = 300, 20
    print(f"{n_models} random models x {n_quads} random quads per regime:\n")
    for mode, gen in generators.items():
        worst = 0.0
        for _ in range(n_models):
            model = gen(rng, 24)
            for _ in range(n_quads):
                v = abs(effective_chsh_value(model, random_quad(rng), mode))
                worst = max(worst, v)
        print(f"  {mode.value}: max |U_eff| = {worst:.6f}  (bound: 2)")

    m = saturating_model()
    quad = optimal_quad()
    res = chsh_value(m, quad)
    print(f"\nDeterministic sign responder at the pi/8 quad: "
          f"U = {res.u:.12f}, M = {res.m:.12f}")
    print("The bound is tight; no local model with these losses beats it.")


if __name__ == "__main__":
    main()

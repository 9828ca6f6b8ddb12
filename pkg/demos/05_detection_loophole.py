"""Fake the violation: a local model that beats 2 by refusing to detect.

A derivative-free search over a two-parameter family -- each party
answers with the sign of cos 2(angle - lambda) but only detects when
the cosine clears a threshold -- finds settings-dependent post-selection
that pushes the coincidence-normalized CHSH value far past 2, all the
way to 4.  The same search restricted to the slice where non-detection
cannot depend on the angle never exceeds 2: the loophole *is* the
angle dependence.
"""

from bellsim.adversary import SearchConfig, get_family, search
from bellsim.bounds import optimal_quad


def main():
    quad = optimal_quad()

    attack = search(SearchConfig(
        family=get_family("threshold-detection"), quad=quad,
        restarts=8, max_evals=500, seed=101))
    print("threshold-detection family, free search:")
    print(f"  best |U_eff| = {attack.best_u_eff:.4f} at "
          f"{ {k: round(v, 4) for k, v in attack.best_parameters.items()} }")
    print(f"  angle-independent non-detection at optimum: "
          f"{attack.assumption_solution1}")
    print(f"  lambda-independent non-detection at optimum: "
          f"{attack.assumption_solution2}")

    honest = search(SearchConfig(
        family=get_family("modulated-p0"), quad=quad,
        restarts=8, max_evals=500, seed=102, freeze={"c1": 0.0}))
    print("\nmodulated-p0 family with the angle modulation frozen to zero:")
    print(f"  best |U_eff| = {honest.best_u_eff:.6f}  (cannot exceed 2)")

    print("\nA measured violation therefore certifies entanglement exactly")
    print("when the detectors' blindness cannot depend on the setting.")


if __name__ == "__main__":
    main()

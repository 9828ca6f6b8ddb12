"""Print the 16-vertex table bounding the per-point CHSH combination.

With the two detection bounds alpha (party 1) and beta (party 2) equal
across each party's two settings, the combination

    u = x(y - y') + x'(y + y')

is linear in the four single-party averages, so its extrema sit at the
sign vertices of the box |x|, |x'| <= alpha, |y|, |y'| <= beta.  Every
vertex evaluates to +-2*alpha*beta: detection losses shrink the
reachable CHSH range quadratically.
"""

from fractions import Fraction

from bellsim.bounds import enumerate_vertices


def show(alpha, beta):
    rows = enumerate_vertices(alpha, beta)
    print(f"\nalpha = {alpha}, beta = {beta}   (2*alpha*beta = {2 * alpha * beta})")
    print(f"{'row':>3} {'x':>7} {'x_p':>7} {'y':>7} {'y_p':>7} {'u':>9}")
    for r in rows:
        print(f"{r.row_index:>3} {str(r.x):>7} {str(r.x_prime):>7} "
              f"{str(r.y):>7} {str(r.y_prime):>7} {str(r.u_value):>9}")
    peak = max(abs(r.u_value) for r in rows)
    print(f"max |u| over vertices: {peak}")


def main():
    show(1, 1)
    show(Fraction(3, 5), Fraction(1, 2))
    print("\nAt unit efficiency the familiar CHSH range [-2, 2] reappears;")
    print("with losses the box shrinks but never grows.")


if __name__ == "__main__":
    main()

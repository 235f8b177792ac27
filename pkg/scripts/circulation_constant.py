"""Bound for S(k) = sum_{r=1}^k (k+1)^2 / (r^3 (k-r+1)^2), uniformly in k.

Split the sum at r = (k+1)/2.
  r <= (k+1)/2:  (k+1)/(k-r+1) <= 2, so this part is at most 4 zeta(3).
  r >  (k+1)/2:  (k+1)^2 / r^3 < 4 / r < 8 / (k+1); with j = k-r+1 the part
                 is at most 8 zeta(2) / (k+1).
Hence S(k) <= 4 zeta(3) + 8 zeta(2) / (k+1) <= 11.39 < 13 for every k >= 1.
The script evaluates S exactly for small k and in floating point further out,
checks the bound, and locates the maximum (S(1) = 4).
"""
import math
from fractions import Fraction

ZETA2 = math.pi**2 / 6
ZETA3 = 1.2020569031595942


def S_exact(k: int) -> Fraction:
    return sum(Fraction((k + 1) ** 2, r**3 * (k - r + 1) ** 2) for r in range(1, k + 1))


def S(k: int) -> float:
    return sum((k + 1) ** 2 / (r**3 * (k - r + 1) ** 2) for r in range(1, k + 1))


def analytic_bound(k: int) -> float:
    return 4 * ZETA3 + 8 * ZETA2 / (k + 1)


def main(k_exact: int = 60, k_float: int = 20000) -> None:
    worst = max(range(1, k_exact + 1), key=S_exact)
    print(f"max over k <= {k_exact} of S(k): S({worst}) = {S_exact(worst)} = {float(S_exact(worst)):.6f}")
    assert S_exact(1) == 4
    for k in list(range(1, 200)) + list(range(200, k_float + 1, 997)):
        s = S(k)
        b = analytic_bound(k)
        assert s <= b + 1e-12, (k, s, b)
        assert b < 13.0, (k, b)
    for k in (1, 2, 5, 10, 100, 1000, k_float):
        print(f"k = {k:6d}   S = {S(k):.6f}   4 zeta(3) + 8 zeta(2)/(k+1) = {analytic_bound(k):.6f}")
    print("bound 13 holds")


if __name__ == "__main__":
    main()

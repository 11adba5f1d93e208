"""Smooth penalties approximating the lifetime shortfall from below."""

from ruinkit.shortfall import PenaltyFunction


def smoothed_shortfall_penalty(x: float, n: float, k: float) -> PenaltyFunction:
    """(x - y)_+ capped at ``n`` with both kinks replaced by parabolas of width 1/k.

    The family increases in n and in k towards the shortfall itself.
    """
    a = x - n - 1.0 / k  # left end of the lower parabola
    b = x - n
    e = x - 1.0 / k

    def f(y):
        if y <= a:
            return n
        if y <= b:
            return n - 0.5 * k * (y - a) ** 2
        if y <= e:
            return -0.5 / k - (y - x)
        if y <= x:
            return 0.5 * k * (y - x) ** 2
        return 0.0

    def f_prime(y):
        if y <= a or y > x:
            return 0.0
        if y <= b:
            return -k * (y - a)
        if y <= e:
            return -1.0
        return k * (y - x)

    return PenaltyFunction(
        f, f_prime, support_upper=x, bound=n, support_lower=a, breakpoints=(a, b, e, x)
    )

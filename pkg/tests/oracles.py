"""Independent reference computations for the test-suite.

Everything here works with the analytic preset functions and brute-force
midpoint sums; nothing is shared with the library's grid quadrature.
"""
import numpy as np

PI = np.pi
N_MID = 1_000_000


def preset_funcs(a1, a2, scale=1.0):
    """Analytic preset-A potentials (times ``scale``) with their support starts."""
    return {
        "p1": (lambda t: scale * np.sin(t), a1),
        "p2": (lambda t: scale * np.cos(t), a1),
        "q1": (lambda t: scale * t / PI, a2),
        "q2": (lambda t: scale * 0.5 + 0 * t, a2),
    }


def midpoint(func, lo, hi, n=N_MID):
    if hi <= lo:
        return 0.0
    t = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    return np.sum(func(t)) * (hi - lo) / n


def alpha(f, g, shift, lo):
    """``int_lo^pi f(t) g(t - shift) dt`` for (func, support-start) pairs."""
    (ff, fa), (gg, ga) = f, g
    lo = max(lo, fa, ga + shift)
    hi = min(PI, PI + shift)
    return midpoint(lambda t: ff(t) * gg(t - shift), lo, hi)


def ev(f, x):
    ff, fa = f
    return ff(x) if fa < x <= PI else 0.0


def kernels_direct(fs, a1, a2, x, m):
    """K^m(x), G^m(x) summed piece by piece."""
    p1, p2, q1, q2 = fs["p1"], fs["p2"], fs["q1"], fs["q2"]
    s = (a1 + a2) / 2
    in1 = a1 < x < PI - a1
    in2 = a2 < x < PI - a2
    in12 = s < x < PI - s
    a_1 = lambda f, g: alpha(f, g, x, x + a1) if in1 else 0.0  # noqa: E731
    a_2 = lambda f, g: alpha(f, g, x, x + a2) if in2 else 0.0  # noqa: E731
    pq = lambda f, g: alpha(f, g, x + (a1 - a2) / 2, x + s) if in12 else 0.0  # noqa: E731
    qp = lambda f, g: alpha(f, g, x + (a2 - a1) / 2, x + s) if in12 else 0.0  # noqa: E731
    sg = (-1) ** m
    K = (ev(q1, x + a2 / 2) - (a_1(p1, p2) - a_1(p2, p1)) - (a_2(q1, q2) - a_2(q2, q1))
         + sg * (ev(p1, x + a1 / 2) + pq(p2, q1) - pq(p1, q2) + qp(q2, p1) - qp(q1, p2)))
    G = (ev(q2, x + a2 / 2) - (a_1(p1, p1) + a_1(p2, p2)) - (a_2(q1, q1) + a_2(q2, q2))
         + sg * (ev(p2, x + a1 / 2) - (pq(p1, q1) + pq(p2, q2) + qp(q1, p1) + qp(q2, p2))))
    return K, G

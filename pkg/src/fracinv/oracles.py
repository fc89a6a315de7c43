"""High-precision reference values computed straight from the singular integral.

These do not touch the lattice discretisation and serve as independent
checks of it.
"""
import mpmath

SERIES_TERMS = 8


def fractional_laplacian_quad(u, x, s, support=(-1.0, 1.0), c=None, dps=30):
    """c_{1,s} P.V. int (u(x) - u(y)) |x - y|^(-1-2s) dy for u supported in ``support``.

    Written as int_0^inf (2u(x) - u(x+z) - u(x-z)) z^(-1-2s) dz and split at
    the points where x +- z leaves the support.
    """
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        x = mpmath.mpf(x)
        lo, hi = mpmath.mpf(support[0]), mpmath.mpf(support[1])
        if c is None:
            c = mpmath.gamma(0.5 + s) * 4**s / (abs(mpmath.gamma(-s)) * mpmath.sqrt(mpmath.pi))
        ux = u(x)

        def inside(y):
            return u(y) if lo < y < hi else mpmath.mpf(0)

        def integrand(z):
            return (2 * ux - inside(x + z) - inside(x - z)) * z ** (-1 - 2 * s)

        # |x - y| beyond the far edge sees only u(x)
        near, far = sorted((hi - x, x - lo))
        # near z = 0 the second difference cancels; integrate its even
        # Taylor series -2 sum u^(2m)(x) z^(2m) / (2m)! term by term instead
        z0 = near / 100
        coeffs = mpmath.taylor(u, x, 2 * SERIES_TERMS)
        head = -2 * mpmath.fsum(
            coeffs[2 * m] * z0 ** (2 * m - 2 * s) / (2 * m - 2 * s) for m in range(1, SERIES_TERMS + 1)
        )
        pts = [z0, near] + ([far] if far > near else [])
        body = head + mpmath.quad(integrand, pts)
        tail = 2 * ux * far ** (-2 * s) / (2 * s)
        return float(c * (body + tail))


def getoor_profile_mp(s):
    s = mpmath.mpf(s)

    def u(y):
        return (1 - y**2) ** s

    return u


def frac_constant_from_symbol(s, dps=30):
    """1 / int_R (1 - cos z) |z|^(-1-2s) dz, the constant making the symbol |xi|^{2s}."""
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        head = mpmath.quad(lambda z: (1 - mpmath.cos(z)) * z ** (-1 - 2 * s), [0, 1])
        osc = mpmath.quadosc(lambda z: mpmath.cos(z) * z ** (-1 - 2 * s), [1, mpmath.inf], omega=1)
        total = 2 * (head + 1 / (2 * s) - osc)
        return float(1 / total)

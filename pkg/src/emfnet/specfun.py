"""Special functions for real and complex arguments.

Self-contained kernel used by the characteristic-function layer: complex
log-gamma, Gauss 2F1 with analytic continuation, 3F2, Appell F1, upper
incomplete gamma and the generalized incomplete beta.  Everything works on
the principal branch; arguments on a branch cut raise instead of silently
picking a side.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma as _loggamma
from scipy.special import roots_legendre


class SpecFunError(Exception):
    """Base class for special-function evaluation failures."""


class PoleError(SpecFunError):
    """Evaluation requested at a pole of the function."""


class ConvergenceError(SpecFunError):
    """Series or continued fraction failed to converge within budget."""


class BranchCutError(SpecFunError):
    """Argument lies on a branch cut where the value is ambiguous."""


@dataclass(frozen=True)
class SeriesControl:
    """Convergence control for the infinite series used throughout."""

    rel_tol: float = 1e-12
    max_terms: int = 20000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_CONTROL = SeriesControl()

_INT_TOL = 1e-12


def _is_nonpositive_int(z: complex) -> bool:
    z = complex(z)
    return (
        abs(z.imag) < _INT_TOL
        and z.real < 0.5
        and abs(z.real - round(z.real)) < _INT_TOL
    )


def _is_int(z: complex) -> bool:
    z = complex(z)
    return abs(z.imag) < _INT_TOL and abs(z.real - round(z.real)) < _INT_TOL


def _check_finite(value: complex, what: str) -> complex:
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ConvergenceError(f"{what} produced a non-finite value")
    return value


def ln_gamma(z: complex) -> complex:
    """Principal branch of log Gamma(z)."""
    z = complex(z)
    if _is_nonpositive_int(z):
        raise PoleError(f"log-gamma pole at z={z}")
    return _check_finite(complex(_loggamma(z)), "ln_gamma")


def gamma_fn(z: complex) -> complex:
    """Gamma(z) via the principal log-gamma branch."""
    return cmath.exp(ln_gamma(z))


def pochhammer(a: complex, k: int) -> complex:
    """Rising factorial (a)_k = a (a+1) ... (a+k-1), with (a)_0 = 1."""
    if k < 0:
        raise ValueError("pochhammer requires k >= 0")
    out = 1.0 + 0.0j
    a = complex(a)
    for i in range(k):
        out *= a + i
    return out


def erf_real(x: float) -> float:
    """Error function on the real line."""
    return math.erf(x)


def _hyp_series(num: tuple, den: tuple, z: complex, ctl: SeriesControl) -> complex:
    """Direct power series of a pFq; raises if it does not converge."""
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(ctl.max_terms):
        ratio = z / (k + 1)
        for p in num:
            ratio *= p + k
        for q in den:
            ratio /= q + k
        term *= ratio
        total += term
        if abs(term) <= ctl.rel_tol * max(abs(total), 1e-300):
            return _check_finite(total, "hypergeometric series")
    raise ConvergenceError(
        f"series did not converge in {ctl.max_terms} terms (|z|={abs(z):.3g})"
    )


def _hyp2f1_poly(a: complex, b: complex, c: complex, z: complex) -> complex:
    """2F1 when a or b is a nonpositive integer: finite sum."""
    n = int(round(-a.real)) if _is_nonpositive_int(a) else int(round(-b.real))
    if _is_nonpositive_int(b) and (not _is_nonpositive_int(a) or -b.real < -a.real):
        a, b = b, a
        n = int(round(-a.real))
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(n):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
    return total


def hyp2f1(
    a: complex,
    b: complex,
    c: complex,
    z: complex,
    ctl: SeriesControl = DEFAULT_CONTROL,
) -> complex:
    """Gauss hypergeometric 2F1(a, b; c; z) on the principal branch.

    Uses the direct series inside the convergence disk and the Pfaff,
    1-z and 1/z linear transformations outside it, choosing whichever
    transformed argument is smallest.
    """
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    if (b.real, b.imag) < (a.real, a.imag):
        a, b = b, a  # canonical order so a<->b symmetry is exact
    if _is_nonpositive_int(c):
        raise PoleError(f"2F1 undefined for nonpositive integer c={c}")
    if z == 0:
        return 1.0 + 0.0j
    if _is_nonpositive_int(a) or _is_nonpositive_int(b):
        return _hyp2f1_poly(a, b, c, z)
    if abs(z - 1) < 1e-300:
        if (c - a - b).real <= 0:
            raise PoleError("2F1 diverges at z=1 for Re(c-a-b) <= 0")
        return cmath.exp(
            ln_gamma(c) + ln_gamma(c - a - b) - ln_gamma(c - a) - ln_gamma(c - b)
        )
    if z.imag == 0 and z.real > 1:
        raise BranchCutError("z on the branch cut [1, inf)")

    if abs(z) <= 0.85:
        return _hyp_series((a, b), (c,), z, ctl)

    w = z / (z - 1)
    if abs(w) <= 0.85:
        # Pfaff; pick the exponent with the smaller parameter growth
        return (1 - z) ** (-a) * _hyp_series((a, c - b), (c,), w, ctl)

    if abs(z) >= 1.15 and not _is_int(a - b):
        zi = 1 / z
        t1 = (
            cmath.exp(ln_gamma(c) + ln_gamma(b - a) - ln_gamma(b) - ln_gamma(c - a))
            * (-z) ** (-a)
            * _hyp_series((a, a - c + 1), (a - b + 1,), zi, ctl)
        )
        t2 = (
            cmath.exp(ln_gamma(c) + ln_gamma(a - b) - ln_gamma(a) - ln_gamma(c - b))
            * (-z) ** (-b)
            * _hyp_series((b, b - c + 1), (b - a + 1,), zi, ctl)
        )
        return _check_finite(t1 + t2, "2F1 1/z transform")

    if abs(1 - z) <= 0.85 and not _is_int(c - a - b):
        u = 1 - z
        t1 = (
            cmath.exp(ln_gamma(c) + ln_gamma(c - a - b) - ln_gamma(c - a) - ln_gamma(c - b))
            * _hyp_series((a, b), (a + b - c + 1,), u, ctl)
        )
        t2 = (
            u ** (c - a - b)
            * cmath.exp(ln_gamma(c) + ln_gamma(a + b - c) - ln_gamma(a) - ln_gamma(b))
            * _hyp_series((c - a, c - b), (c - a - b + 1,), u, ctl)
        )
        return _check_finite(t1 + t2, "2F1 1-z transform")

    # Last resort: Pfaff always maps off-cut z into |w| < 1; slow near |w|=1.
    if abs(w) < 1:
        return (1 - z) ** (-a) * _hyp_series((a, c - b), (c,), w, ctl)
    raise ConvergenceError(f"no convergent representation for 2F1 at z={z}")


def hyp3f2(
    a1: complex,
    a2: complex,
    a3: complex,
    b1: complex,
    b2: complex,
    z: complex,
    ctl: SeriesControl = DEFAULT_CONTROL,
) -> complex:
    """3F2(a1, a2, a3; b1, b2; z) by direct summation.

    Only the series region is supported; outside it a ConvergenceError
    signals the caller to fall back to a quadrature route.
    """
    b1, b2 = complex(b1), complex(b2)
    if _is_nonpositive_int(b1) or _is_nonpositive_int(b2):
        raise PoleError("3F2 undefined for nonpositive integer lower parameter")
    if z == 0:
        return 1.0 + 0.0j
    if abs(z) > 1:
        raise ConvergenceError(f"3F2 series diverges for |z|={abs(z):.3g} > 1")
    return _hyp_series((a1, a2, a3), (b1, b2), complex(z), ctl)


def _on_cut(x: complex) -> bool:
    return x.imag == 0 and x.real >= 1


_GL_NODES, _GL_WEIGHTS = roots_legendre(24)


def _panel_quad(f, lo: float, hi: float) -> complex:
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    s = mid + half * _GL_NODES
    return half * np.sum(_GL_WEIGHTS * f(s))


def _graded_panels(breaks):
    """Log-graded panel edges on (0, 1] refined at each breakpoint scale."""
    edges = {1.0}
    for b in breaks:
        b = min(max(b, 1e-14), 1.0)
        x = b
        while x < 1.0:
            edges.add(x)
            x *= 4.0
        x = b
        for _ in range(12):
            x *= 0.25
            if x < 1e-14:
                break
            edges.add(x)
    edges.add(1e-14)
    return sorted(edges)


def appell_f1(
    a: complex,
    b1: complex,
    b2: complex,
    c: complex,
    x: complex,
    y: complex,
    ctl: SeriesControl = DEFAULT_CONTROL,
) -> complex:
    """Appell F1(a; b1, b2; c; x, y) on the principal branch.

    Prefers the one-dimensional Euler integral when Re(c) > Re(a) > 0,
    otherwise falls back to the double series (requires max(|x|,|y|) < 1).
    Arguments on the cut [1, inf) are rejected.
    """
    a, b1, b2, c = complex(a), complex(b1), complex(b2), complex(c)
    x, y = complex(x), complex(y)
    if _is_nonpositive_int(c):
        raise PoleError(f"Appell F1 undefined for nonpositive integer c={c}")
    if _on_cut(x) or _on_cut(y):
        raise BranchCutError("Appell F1 argument on the branch cut [1, inf)")
    if x == 0 and y == 0:
        return 1.0 + 0.0j
    if y == 0:
        return hyp2f1(a, b1, c, x, ctl)
    if x == 0:
        return hyp2f1(a, b2, c, y, ctl)

    if c.real > a.real > 0:
        ca1 = c - a - 1

        def integrand(s, u):
            # s and u = 1 - s supplied separately so both endpoints are
            # resolved without cancellation
            out = s ** (a - 1) * (1 - x * s) ** (-b1) * (1 - y * s) ** (-b2)
            if ca1 != 0:
                out = out * u ** ca1
            return out

        breaks = [1 / abs(x), 1 / abs(y)]
        # left half in s (singularity s^(a-1) at 0), right half in u = 1-s
        # (singularity (1-s)^(c-a-1) at 1); interior boundary layers at
        # |xs| ~ 1 and |ys| ~ 1 get their own graded refinement
        left = [e for e in _graded_panels(breaks) if e <= 0.5] + [0.5]
        right = [e for e in _graded_panels([1 - b for b in breaks if b < 1] + [1e-14]) if e <= 0.5] + [0.5]
        total = 0.0 + 0.0j
        for lo, hi in zip(left[:-1], left[1:]):
            total += _panel_quad(lambda s: integrand(s, 1 - s), lo, hi)
        for lo, hi in zip(right[:-1], right[1:]):
            total += _panel_quad(lambda u: integrand(1 - u, u), lo, hi)
        # analytic tails for the (0, s_min] and (0, u_min] slivers
        s_min, u_min = left[0], right[0]
        total += s_min ** a / a
        total += u_min ** (ca1 + 1) / (ca1 + 1) * (1 - x) ** (-b1) * (1 - y) ** (-b2)
        norm = cmath.exp(ln_gamma(c) - ln_gamma(a) - ln_gamma(c - a))
        return _check_finite(norm * total, "Appell F1 integral")

    if max(abs(x), abs(y)) >= 1:
        raise ConvergenceError(
            "Appell F1 double series diverges and the integral "
            "representation does not apply (need Re(c) > Re(a) > 0)"
        )
    # Double series: sum over n of x^n-terms, each inner sum a 2F1 row.
    total = 0.0 + 0.0j
    outer = 1.0 + 0.0j  # (a)_n (b1)_n / ((c)_n n!) x^n
    for n in range(ctl.max_terms):
        row = outer * hyp2f1(a + n, b2, c + n, y, ctl)
        total += row
        if abs(row) <= ctl.rel_tol * max(abs(total), 1e-300) and n > 2:
            return _check_finite(total, "Appell F1 double series")
        outer *= (a + n) * (b1 + n) / ((c + n) * (n + 1)) * x
    raise ConvergenceError("Appell F1 double series did not converge")


def upper_inc_gamma(
    a: complex, z: complex, ctl: SeriesControl = DEFAULT_CONTROL
) -> complex:
    """Upper incomplete gamma Gamma(a, z) on the principal branch."""
    a, z = complex(a), complex(z)
    if z == 0:
        if _is_nonpositive_int(a):
            raise PoleError("Gamma(a, 0) = Gamma(a) has a pole here")
        return gamma_fn(a)
    if abs(z) < max(abs(a) + 1, 6.0):
        if _is_nonpositive_int(a):
            raise PoleError(
                "series expansion of Gamma(a, z) needs a away from "
                "nonpositive integers"
            )
        # Gamma(a) - sum_k (-1)^k z^(a+k) / (k! (a+k))
        total = 0.0 + 0.0j
        term = 1.0 + 0.0j  # (-1)^k z^k / k!
        za = z ** a
        for k in range(ctl.max_terms):
            contrib = term * za / (a + k)
            total += contrib
            if abs(contrib) <= ctl.rel_tol * max(abs(total), 1e-300):
                return _check_finite(gamma_fn(a) - total, "upper_inc_gamma series")
            term *= -z / (k + 1)
        raise ConvergenceError("upper incomplete gamma series did not converge")
    # Modified Lentz continued fraction, valid away from the negative real axis.
    if z.imag == 0 and z.real < 0:
        raise BranchCutError("continued fraction invalid on the negative real axis")
    tiny = 1e-300
    f = tiny
    c_ = f
    d_ = 0.0 + 0.0j
    b0 = z + 1 - a
    c_ = b0 + 1 / tiny
    d_ = 1 / b0
    f = d_
    for i in range(1, ctl.max_terms):
        an = i * (a - i)
        bn = b0 + 2 * i
        d_ = bn + an * d_
        if d_ == 0:
            d_ = tiny
        c_ = bn + an / c_
        if c_ == 0:
            c_ = tiny
        d_ = 1 / d_
        delta = c_ * d_
        f *= delta
        if abs(delta - 1) < ctl.rel_tol:
            return _check_finite(
                cmath.exp(-z + a * cmath.log(z)) * f, "upper_inc_gamma CF"
            )
    raise ConvergenceError("upper incomplete gamma continued fraction stalled")


def inc_beta(
    z: complex, a: complex, b: complex, ctl: SeriesControl = DEFAULT_CONTROL
) -> complex:
    """Generalized incomplete beta B(z; a, b) = int_0^z t^(a-1)(1-t)^(b-1) dt.

    Computed as z^a / a * 2F1(a, 1-b; a+1; z) on the principal branch.
    """
    a, b, z = complex(a), complex(b), complex(z)
    if _is_nonpositive_int(a):
        raise PoleError(f"incomplete beta undefined for nonpositive integer a={a}")
    if z == 0:
        return 0.0 + 0.0j
    return z ** a / a * hyp2f1(a, 1 - b, a + 1, z, ctl)

"""Antenna gain models for a half-wavelength-spaced uniform linear array.

Five azimuthal gain models over the served sector [-pi/3, pi/3]: the
theoretical ULA pattern, a flat-top approximation, a truncated cosine,
a Gaussian main-lobe fit, and a multi-cosine model that keeps up to
``k_max`` side lobes.  Gain moments E[G^k] under a uniformly random
beam direction are available in closed form for every model except the
theoretical ULA, which is served by adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erf

SECTOR_HALF_ANGLE = math.pi / 3

PATTERN_KINDS = (
    "theoretical_ula",
    "flat_top",
    "truncated_cos",
    "gaussian",
    "multi_cos",
)

_CLOSED_FORM_KINDS = ("flat_top", "truncated_cos", "gaussian", "multi_cos")


def _ula_gain(n: int, phi):
    """sin^2((pi N/2) sin phi) / (N sin((pi/2) sin phi))^2, with the
    removable singularity at sin phi = 0 evaluated as 1."""
    u = 0.5 * math.pi * np.sin(phi)
    num = np.sin(n * u)
    den = n * np.sin(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(den) < 1e-300, 1.0, (num / np.where(den == 0, 1.0, den)) ** 2)
    return out


@lru_cache(maxsize=None)
def half_power_angle(n_elements: int) -> float:
    """Angle phi_3dB at which the theoretical ULA gain falls to 1/2.

    The unique root of G_ULA(phi) = 1/2 in (0, 2/N), by bisection.
    """
    if n_elements < 2:
        raise ValueError(f"need n_elements >= 2, got {n_elements}")
    n = n_elements

    def f(phi):
        return float(_ula_gain(n, phi)) - 0.5

    lo, hi = 1e-12, 2.0 / n
    # G(0+)=1 > 1/2; G at the first null boundary is 0 < 1/2
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SideLobeTable:
    """Side-lobe peak locations x_k and amplitudes chi_k, index 0..k_max.

    x_k are the ordered positive solutions of N tan(x) = tan(N x) in the
    array variable x = (pi/2) sin(phi); chi_k = sin^2(N x_k)/(N sin x_k)^2.
    By convention x_0 = 0 and chi_0 = 1 (main lobe).
    """

    x_k: np.ndarray
    chi_k: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_k", np.asarray(self.x_k, dtype=float))
        object.__setattr__(self, "chi_k", np.asarray(self.chi_k, dtype=float))
        self.x_k.setflags(write=False)
        self.chi_k.setflags(write=False)


def max_side_lobes(n_elements: int) -> int:
    """Largest admissible k_max for the multi-cosine model.

    k_max = 0 (main lobe only) is always valid: the main lobe spans
    |phi| <= 2/N, inside the sector for every N >= 2.
    """
    return max(0, math.floor(n_elements * math.sqrt(3) / 4 - 1) - 1)


@lru_cache(maxsize=None)
def side_lobe_table(n_elements: int, k_max: int) -> SideLobeTable:
    """Locate the first k_max side-lobe peaks of the ULA pattern.

    The kth peak satisfies N tan(x) = tan(N x); equivalently it is a root
    of h(x) = N sin(x) cos(N x) - cos(x) sin(N x), which is pole-free.
    h changes sign between the kth null x = k pi/N and the midpoint
    x = (2k+1) pi/(2N) of the kth lobe.
    """
    n = n_elements
    if n < 2:
        raise ValueError(f"need n_elements >= 2, got {n}")
    if k_max < 0:
        raise ValueError(f"need k_max >= 0, got {k_max}")
    if k_max > max_side_lobes(n):
        raise ValueError(
            f"k_max={k_max} too large for N={n} "
            f"(limit {max_side_lobes(n)})"
        )

    def h(x):
        return n * math.sin(x) * math.cos(n * x) - math.cos(x) * math.sin(n * x)

    xs = [0.0]
    chis = [1.0]
    for k in range(1, k_max + 1):
        lo = k * math.pi / n + 1e-13
        hi = (2 * k + 1) * math.pi / (2 * n) - 1e-13
        if h(lo) * h(hi) > 0:
            raise ValueError(f"bracket failure for side lobe k={k}, N={n}")
        xk = brentq(h, lo, hi, xtol=1e-14, rtol=1e-15)
        xs.append(xk)
        chis.append((math.sin(n * xk) / (n * math.sin(xk))) ** 2)
    return SideLobeTable(np.array(xs), np.array(chis))


@dataclass(frozen=True)
class AntennaPattern:
    """One of the five sector gain models.

    side_lobe_g defaults to the first side-lobe amplitude chi_1 of the
    theoretical pattern for the same N (only meaningful for flat_top and
    gaussian).  k_max only applies to multi_cos.
    """

    kind: str
    n_elements: int
    side_lobe_g: float | None = None
    k_max: int = 0

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if self.n_elements < 2:
            raise ValueError(f"need n_elements >= 2, got {self.n_elements}")
        if self.kind == "multi_cos":
            if not 0 <= self.k_max <= max_side_lobes(self.n_elements):
                raise ValueError(
                    f"k_max={self.k_max} outside [0, "
                    f"{max_side_lobes(self.n_elements)}] for N={self.n_elements}"
                )
        if self.side_lobe_g is None and self.kind in ("flat_top", "gaussian"):
            if max_side_lobes(self.n_elements) < 1:
                raise ValueError(
                    f"no default side-lobe level for N={self.n_elements}; "
                    "pass side_lobe_g explicitly"
                )
            object.__setattr__(
                self, "side_lobe_g", float(side_lobe_table(self.n_elements, 1).chi_k[1])
            )
        g = self.side_lobe_g
        if self.kind == "flat_top" and not 0 < g < 1:
            raise ValueError(f"flat_top needs g in (0,1), got {g}")
        if self.kind == "gaussian" and not 0 < g < self.n_elements / 2:
            raise ValueError(
                f"gaussian needs g in (0, N/2) for a real decay rate, got {g}"
            )

    @property
    def phi_3db(self) -> float:
        return half_power_angle(self.n_elements)

    @property
    def gaussian_eta(self) -> float:
        """Decay rate of the Gaussian model: half power at phi_3dB."""
        n, g = self.n_elements, self.side_lobe_g
        return math.log((n - g) / (n / 2 - g)) / self.phi_3db ** 2

    @property
    def lobe_table(self) -> SideLobeTable:
        return side_lobe_table(self.n_elements, self.k_max)


def gain(pattern: AntennaPattern, phi) -> np.ndarray | float:
    """Gain of ``pattern`` at azimuth offset ``phi`` from boresight.

    phi must lie in the served sector [-pi/3, pi/3]; accepts scalars or
    arrays.  All models peak at 1 except the Gaussian, which peaks at N
    (its unnormalized form enters the characteristic functions).
    """
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi_arr) > SECTOR_HALF_ANGLE * (1 + 1e-12)):
        raise ValueError("phi outside the served sector [-pi/3, pi/3]")
    n = pattern.n_elements
    a = np.abs(phi_arr)

    if pattern.kind == "theoretical_ula":
        out = _ula_gain(n, phi_arr)
    elif pattern.kind == "flat_top":
        out = np.where(a <= pattern.phi_3db, 1.0, pattern.side_lobe_g)
    elif pattern.kind == "truncated_cos":
        out = np.where(a <= 2.0 / n, np.cos(n * math.pi * phi_arr / 4) ** 2, 0.0)
    elif pattern.kind == "gaussian":
        g = pattern.side_lobe_g
        out = (n - g) * np.exp(-pattern.gaussian_eta * phi_arr ** 2) + g
    else:  # multi_cos
        chi = pattern.lobe_table.chi_k
        out = np.where(a <= 2.0 / n, np.cos(n * math.pi * phi_arr / 4) ** 2, 0.0)
        side = np.sin(n * math.pi * phi_arr / 2) ** 2
        for i in range(1, pattern.k_max + 1):
            band = (a > 2.0 * i / n) & (a <= 2.0 * (i + 1) / n)
            out = np.where(band, chi[i] * side, out)
    if np.isscalar(phi) or phi_arr.ndim == 0:
        return float(out)
    return out


def _central_binom_ratio(k: int) -> float:
    """binom(2k, k) / 4^k = Gamma(k + 1/2) / (sqrt(pi) k!)."""
    return math.comb(2 * k, k) / 4.0 ** k


def gain_moment(pattern: AntennaPattern, k: int) -> float:
    """kth moment E[G^k] of the gain under a uniform beam direction.

    Closed forms exist for every model except the theoretical ULA; the
    expectation is (3/(2 pi)) * integral of G^k over the sector.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n = pattern.n_elements

    if pattern.kind == "theoretical_ula":
        raise ValueError(
            "no closed-form moment for theoretical_ula; "
            "use gain_moment_quadrature"
        )
    if pattern.kind == "flat_top":
        g = pattern.side_lobe_g
        frac = 3 * pattern.phi_3db / math.pi
        return frac + (1 - frac) * g ** k
    if pattern.kind == "truncated_cos":
        return 6 / (n * math.pi) * _central_binom_ratio(k)
    if pattern.kind == "gaussian":
        g = pattern.side_lobe_g
        eta = pattern.gaussian_eta
        total = g ** k
        for p in range(1, k + 1):
            rate = math.sqrt(p * eta)
            total += (
                3
                / (2 * math.pi)
                * math.comb(k, p)
                * (n - g) ** p
                * g ** (k - p)
                * math.sqrt(math.pi)
                / rate
                * erf(rate * SECTOR_HALF_ANGLE)
            )
        return total
    # multi_cos: each side lobe contributes like the main lobe scaled by
    # chi_i^k, since sin^(2k) and cos^(2k) share the same lobe average
    chi = pattern.lobe_table.chi_k
    lobe_sum = 1.0 + float(np.sum(chi[1:] ** k))
    return 6 / (n * math.pi) * _central_binom_ratio(k) * lobe_sum


def gain_moment_quadrature(pattern: AntennaPattern, k: int) -> float:
    """Oracle for gain_moment: adaptive quadrature of (3/(2 pi)) G^k."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n = pattern.n_elements
    if pattern.kind == "multi_cos":
        pieces = [2.0 * i / n for i in range(pattern.k_max + 2)]
    elif pattern.kind == "truncated_cos":
        pieces = [2.0 / n]
    elif pattern.kind == "flat_top":
        pieces = [pattern.phi_3db]
    else:
        pieces = []
    pieces = [p for p in pieces if p < SECTOR_HALF_ANGLE]

    def f(phi):
        return gain(pattern, phi) ** k

    val, _ = quad(
        f,
        0.0,
        SECTOR_HALF_ANGLE,
        points=pieces or None,
        limit=200,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return 3 / math.pi * val  # even integrand: double the half-sector

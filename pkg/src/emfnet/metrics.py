"""Gil-Pelaez inversions and outer integrations over the network law.

Turns the characteristic functions of the CF layer into the reported
performance metrics: EMFE CDFs per user kind, the SINR coverage CCDF,
the joint SCAIU metric with its conditional form and Frechet bounds,
and (N, d) sweep grids with contour extraction.

The oscillatory integrals use a composite cubic "Filon" rule on a
log-spaced q-grid: on every interval the slowly varying part h(q) of
the integrand is replaced by a local cubic and integrated against the
kernel e^{-j a q} exactly.  The oscillation frequency a (the CDF
threshold) therefore never constrains the grid, only the variation of
the CF itself does.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaincc, roots_legendre, sici

from . import antenna, charfun as cf, network
from .antenna import SECTOR_HALF_ANGLE, AntennaPattern
from .network import NetworkConfig, UserKind, mean_rx_power, noise_power
from .specfun import ConvergenceError

logger = logging.getLogger(__name__)

METRIC_KINDS = ("EmfeCdf", "SinrCcdf", "Scaiu", "CondScaiu", "FrechetLB", "FrechetUB")


class MetricsError(RuntimeError):
    """Numerical failure inside the metrics layer."""


class NonDecayError(MetricsError):
    """CF modulus never fell below the cutoff and the oscillatory tail
    bound exceeds the tolerance."""


class DegenerateCoverageError(MetricsError):
    """Conditional SCAIU requested where the coverage probability
    vanishes."""


# probabilities outside [-_CLAMP_TOL, 1 + _CLAMP_TOL] indicate a
# quadrature problem and are logged loudly; smaller overshoots are
# routine roundoff
_CLAMP_TOL = 1e-6

_CLAMP_STATS = {"count": 0, "worst": 0.0}


def clamp_stats() -> dict:
    """Counters for out-of-[0,1] probabilities seen since the last reset."""
    return dict(_CLAMP_STATS)


def reset_clamp_stats() -> None:
    _CLAMP_STATS["count"] = 0
    _CLAMP_STATS["worst"] = 0.0


def _clamp_probability(p: float) -> float:
    if not math.isfinite(p):
        raise MetricsError("non-finite probability from quadrature")
    if 0.0 <= p <= 1.0:
        return p
    excess = max(-p, p - 1.0)
    _CLAMP_STATS["count"] += 1
    _CLAMP_STATS["worst"] = max(_CLAMP_STATS["worst"], excess)
    if excess > _CLAMP_TOL:
        logger.warning("clamping probability %.6g (excess %.3g)", p, excess)
    else:
        logger.debug("clamping probability %.6g (excess %.3g)", p, excess)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization knobs for every integral in this module.

    eps_q is the CF-modulus cutoff that truncates Gil-Pelaez integrals;
    q_nodes_per_decade controls the log-grid density of the 1-D
    inversions and joint_q_nodes_per_decade that of the SCAIU tensor
    grids; max_decades bounds the search for the cutoff.  r0_nodes and
    theta_nodes discretize the outer expectation over the serving-BS
    polar coordinates.
    """

    eps_q: float = 1e-10
    q_nodes_per_decade: int = 32
    max_decades: int = 64
    r0_nodes: int = 64
    theta_nodes: int = 64
    joint_q_nodes_per_decade: int = 12

    def __post_init__(self):
        for name in (
            "q_nodes_per_decade",
            "max_decades",
            "r0_nodes",
            "theta_nodes",
            "joint_q_nodes_per_decade",
        ):
            if getattr(self, name) < 4:
                raise ValueError(f"{name} must be at least 4")
        if not 0 < self.eps_q < 1e-2:
            raise ValueError("eps_q must lie in (0, 1e-2)")

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        """Same spec with all node counts multiplied (stability checks)."""
        return replace(
            self,
            q_nodes_per_decade=self.q_nodes_per_decade * factor,
            r0_nodes=self.r0_nodes * factor,
            theta_nodes=self.theta_nodes * factor,
            joint_q_nodes_per_decade=self.joint_q_nodes_per_decade * factor,
        )


DEFAULT_QUAD = QuadratureSpec()


@dataclass
class CdfCurve:
    """A sampled distribution curve with provenance metadata."""

    thresholds: np.ndarray
    values: np.ndarray
    user_kind: str
    metric: str
    config_hash: str
    method: str = "analytic"

    _MONOTONE_SLACK = 1e-4

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.metric not in METRIC_KINDS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.thresholds.shape != self.values.shape:
            raise ValueError("threshold/value shape mismatch")
        if np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-12):
            raise ValueError("curve values outside [0, 1]")
        steps = np.diff(self.values)
        if self.metric == "EmfeCdf" and np.any(steps < -self._MONOTONE_SLACK):
            raise ValueError("EMFE CDF not nondecreasing")
        if self.metric == "SinrCcdf" and np.any(steps > self._MONOTONE_SLACK):
            raise ValueError("SINR CCDF not nonincreasing")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "value", "method", "config_hash"])
            for t, v in zip(self.thresholds, self.values):
                writer.writerow([repr(float(t)), repr(float(v)), self.method, self.config_hash])


# ---------------------------------------------------------------------------
# oscillatory quadrature core
# ---------------------------------------------------------------------------

_MOMENT_SERIES_TERMS = 34


def _osc_moments(u: np.ndarray) -> np.ndarray:
    """m_k(u) = int_0^1 t^k e^{-j u t} dt for k = 0..3, elementwise.

    Power series below |u| = 4 (the forward recurrence cancels there),
    recurrence m_k = (k m_{k-1} - e^{-ju})/(ju) above.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape + (4,), dtype=complex)
    small = np.abs(u) < 4.0
    if np.any(small):
        z = -1j * u[small]
        power = np.ones_like(z)
        acc = np.zeros(z.shape + (4,), dtype=complex)
        for k in range(4):
            acc[..., k] = 1.0 / (k + 1)
        for t in range(1, _MOMENT_SERIES_TERMS + 1):
            power = power * z / t
            for k in range(4):
                acc[..., k] += power / (k + t + 1)
        out[small] = acc
    big = ~small
    if np.any(big):
        ub = u[big]
        ju = 1j * ub
        phase = np.exp(-ju)
        m = (1.0 - phase) / ju
        out[big, 0] = m
        for k in range(1, 4):
            m = (k * m - phase) / ju
            out[big, k] = m
    return out


class FilonGrid:
    """Composite cubic interpolatory rule on a fixed node set.

    weights(a) returns complex weights W with W @ h approximating
    int h(q) e^{-j a q} dq over [q[0], q[-1]], exact for the kernel and
    cubic in h per interval (4-point sliding stencils).
    """

    def __init__(self, q: np.ndarray):
        q = np.asarray(q, dtype=float)
        if q.size < 4:
            raise ValueError("need at least 4 quadrature nodes")
        if np.any(np.diff(q) <= 0):
            raise ValueError("nodes must be strictly increasing")
        self.q = q
        n = q.size
        self.lengths = np.diff(q)
        starts = np.clip(np.arange(n - 1) - 1, 0, n - 4)
        self.stencil = starts[:, None] + np.arange(4)[None, :]
        t = (q[self.stencil] - q[:-1, None]) / self.lengths[:, None]
        vander = t[..., None] ** np.arange(4)[None, None, :]
        self.inv_vander = np.linalg.inv(vander)

    def weights(self, a: float) -> np.ndarray:
        u = a * self.lengths
        moments = _osc_moments(u)
        scale = self.lengths * np.exp(-1j * a * self.q[:-1])
        per_point = np.einsum("ikr,ik->ir", self.inv_vander, moments) * scale[:, None]
        out = np.zeros(self.q.size, dtype=complex)
        np.add.at(out, self.stencil, per_point)
        return out


_PROBE_DECADES = np.arange(-30, 41)
# flatness tolerance: below q_lo the integrand contributes O(|1-cf| + T q)
_FLAT_TOL = 1e-8
_TAIL_TOL = 1e-6


def _build_inversion_grid(cf_vec, quad: QuadratureSpec, t_max: float, nodes_per_decade: int):
    """Pick the active q-range of a Gil-Pelaez integrand and sample the
    CF on a log grid across it.

    Probing stops as soon as the modulus has stayed below the cutoff
    for two consecutive decades, so the CF is never evaluated at
    arguments far beyond its decay (where closed forms may lose the
    cancellation that keeps them stable).  A CF that settles on a
    nonzero plateau instead (the law has an atom at zero, possible for
    patterns whose gain vanishes on most orientations over a small
    disk) is truncated at the plateau and the limit value returned as
    `atom` for an analytic tail correction.  Returns (q, cf_values,
    decayed, atom).
    """
    n_probe = _PROBE_DECADES.size
    probe_vals = np.full(n_probe, np.nan, dtype=complex)
    modulus = np.full(n_probe, np.nan)
    deviation = np.full(n_probe, np.nan)
    active_idx = None
    decay_idx = None
    atom = 0.0 + 0.0j
    block = 8
    for s in range(0, n_probe, block):
        stop = min(s + block, n_probe)
        vals = np.asarray(cf_vec(10.0 ** _PROBE_DECADES[s:stop].astype(float)))
        probe_vals[s:stop] = vals
        modulus[s:stop] = np.abs(vals)
        deviation[s:stop] = np.abs(1.0 - vals)
        if active_idx is None:
            hits = np.nonzero(deviation[:stop] > _FLAT_TOL)[0]
            if hits.size:
                active_idx = int(hits[0])
        if active_idx is not None:
            below = modulus[:stop] < quad.eps_q
            for i in range(active_idx + 1, stop - 1):
                if below[i] and below[i + 1]:
                    decay_idx = i + 1
                    break
            if decay_idx is None:
                # plateau: two consecutive decades with negligible change
                # at a modulus still above the cutoff.  The value must
                # have moved well away from 1, otherwise the flat region
                # before the CF starts decaying looks like a plateau too
                for i in range(active_idx + 1, stop - 2):
                    step1 = abs(probe_vals[i + 1] - probe_vals[i])
                    step2 = abs(probe_vals[i + 2] - probe_vals[i + 1])
                    scale = 1e-5 * max(modulus[i], quad.eps_q)
                    if (
                        step1 < scale
                        and step2 < scale
                        and modulus[i] >= quad.eps_q
                        and deviation[i + 2] > 1e-2
                    ):
                        decay_idx = i + 2
                        atom = complex(probe_vals[i + 2])
                        break
            if decay_idx is not None:
                break

    if active_idx is not None:
        k_lo = int(_PROBE_DECADES[active_idx]) - 1
    else:
        k_lo = int(_PROBE_DECADES[-1]) - 1
        logger.warning("CF flat over the whole probe range; degenerate law?")
    if t_max > 0:
        # keep q_lo T below the flatness tolerance so the truncated
        # head integral stays first-order small
        k_lo = min(k_lo, int(math.floor(math.log10(_FLAT_TOL / t_max))))
    k_lo = max(k_lo, int(_PROBE_DECADES[0]))

    if decay_idx is not None:
        decayed = True
        k_hi = int(_PROBE_DECADES[decay_idx])
    else:
        decayed = False
        k_hi = k_lo + quad.max_decades

    n = nodes_per_decade * (k_hi - k_lo) + 1
    q = np.geomspace(10.0 ** k_lo, 10.0 ** k_hi, n)
    vals = np.asarray(cf_vec(q))
    if not np.all(np.isfinite(vals)):
        raise MetricsError(
            f"CF evaluation produced non-finite values on the grid "
            f"[{q[0]:.3g}, {q[-1]:.3g}]"
        )
    return q, vals, decayed, atom


class GilPelaezPlan:
    """A sampled CF plus Filon machinery, reusable across thresholds.

    Building the q grid (probing decades, evaluating the CF) dominates
    the cost of an inversion, so callers that sweep thresholds against
    a fixed CF should build one plan and call evaluate repeatedly.
    """

    def __init__(self, cf_vec, quad: QuadratureSpec, t_max: float,
                 nodes_per_decade: int | None = None):
        probe0 = complex(np.asarray(cf_vec(np.array([0.0])))[0])
        if abs(probe0 - 1.0) > 1e-9:
            raise ValueError(f"cf(0) = {probe0}; not a characteristic function")
        self.quad = quad
        self.q, self.vals, self.decayed, self.atom = _build_inversion_grid(
            cf_vec, quad, t_max, nodes_per_decade or quad.q_nodes_per_decade
        )
        self._h = self.vals / self.q
        self._grid = FilonGrid(self.q)

    def _atom_tail(self, t: float) -> float:
        """int_{q_end}^inf Im[atom e^{-jqt}]/q dq in closed form via the
        sine and cosine integrals."""
        if self.atom == 0:
            return 0.0
        if t == 0.0:
            return 0.0
        si, ci = sici(abs(t) * self.q[-1])
        sign = 1.0 if t > 0 else -1.0
        return float(-self.atom.imag * ci - sign * self.atom.real * (math.pi / 2 - si))

    def evaluate(self, thresholds):
        """F(T) = 1/2 - (1/pi) int_0^inf Im[cf(q) e^{-jqT}]/q dq."""
        t_arr = np.atleast_1d(np.asarray(thresholds, dtype=float))
        q, vals = self.q, self.vals
        if not self.decayed:
            # integration-by-parts bound on the dropped oscillatory tail
            end_mod = abs(vals[-1])
            t_min_pos = (
                float(np.min(np.abs(t_arr[t_arr != 0]))) if np.any(t_arr != 0) else 0.0
            )
            tail = end_mod / (t_min_pos * q[-1]) if t_min_pos > 0 else math.inf
            if end_mod >= self.quad.eps_q and tail > _TAIL_TOL:
                raise NonDecayError(
                    f"|cf| = {end_mod:.3g} at q = {q[-1]:.3g} after "
                    f"{self.quad.max_decades} decades; tail bound {tail:.3g}"
                )
        out = np.empty(t_arr.shape, dtype=float)
        for i, t in enumerate(t_arr):
            w = self._grid.weights(t)
            integral = float(np.imag(w @ self._h))
            # head piece [0, q_lo]: integrand is flat there by construction
            integral += float(np.imag(vals[0] * np.exp(-1j * t * q[0])))
            integral += self._atom_tail(float(t))
            out[i] = _clamp_probability(0.5 - integral / math.pi)
        if np.ndim(thresholds) == 0:
            return float(out[0])
        return out


def gil_pelaez_cdf(cf_vec, thresholds, quad: QuadratureSpec | None = None):
    """CDF values F(T) = 1/2 - (1/pi) int_0^inf Im[cf(q) e^{-jqT}]/q dq.

    cf_vec must accept a float array of q values and return the CF
    elementwise.  thresholds may be a scalar or an array; the CF is
    sampled once and shared across thresholds.
    """
    quad = quad or DEFAULT_QUAD
    t_arr = np.atleast_1d(np.asarray(thresholds, dtype=float))
    t_max = float(np.max(np.abs(t_arr))) if t_arr.size else 0.0
    return GilPelaezPlan(cf_vec, quad, t_max).evaluate(thresholds)


# ---------------------------------------------------------------------------
# robust (fallback-capable) CF evaluation
# ---------------------------------------------------------------------------

_FALLBACK_CHUNK = 32


def _robust_vector(closed, fallback, q: np.ndarray) -> np.ndarray:
    """closed(q) elementwise, retrying failed chunks with fallback.

    The closed forms raise ConvergenceError only in the Gaussian-pattern
    large-argument regime, so the retry granularity is per chunk of q.
    """
    try:
        return np.asarray(closed(q))
    except ConvergenceError:
        pass
    out = np.empty(q.size, dtype=complex)
    for s in range(0, q.size, _FALLBACK_CHUNK):
        sl = slice(s, min(s + _FALLBACK_CHUNK, q.size))
        try:
            out[sl] = np.asarray(closed(q[sl]))
        except ConvergenceError:
            out[sl] = np.asarray(fallback(q[sl]))
    return out


def _orientation_cf_quad(cfg: NetworkConfig, q, pbar) -> np.ndarray:
    """Angular-quadrature version of the orientation-averaged CF,
    vectorized over broadcastable q and pbar arrays."""
    nodes, weights = cf._angle_rule(cfg, n_nodes=16)
    gains = antenna.gain(cfg.pattern, nodes)
    m = cfg.nakagami_m
    w = 1j * (np.asarray(q, dtype=float) / m) * np.asarray(pbar, dtype=float)
    flat = np.broadcast_arrays(w)[0].reshape(-1)
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 4_000_000 // gains.size)
    for s in range(0, flat.size, chunk):
        block = flat[s : s + chunk, None]
        out[s : s + chunk] = ((1.0 - block * gains[None, :]) ** (-m)) @ weights
    return out.reshape(np.shape(w))


def _orientation_cf(cfg: NetworkConfig, q: np.ndarray, pbar: float) -> np.ndarray:
    return _robust_vector(
        lambda qq: cf.orientation_averaged_cf(cfg, qq, pbar),
        lambda qq: _orientation_cf_quad(cfg, qq, pbar),
        np.asarray(q, dtype=float),
    )


def _interference_cf_quad(cfg: NetworkConfig, q: np.ndarray, r0: float) -> np.ndarray:
    u0 = r0 ** 2 + cfg.bs_height ** 2
    ut = cfg.disk_radius ** 2 + cfg.bs_height ** 2
    nodes, weights = cf._radial_rule(u0, ut)
    pbar = cfg.eirp / cfg.kappa * nodes ** (-cfg.pathloss_exp / 2)
    c = _orientation_cf_quad(cfg, q[:, None], pbar[None, :])
    eta = (1.0 - c) @ weights
    return np.exp(-math.pi * cfg.density * eta)


def _interference_cf(cfg: NetworkConfig, q, r0: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return _robust_vector(
        lambda qq: cf.cf_interference(cfg, qq, r0),
        lambda qq: _interference_cf_quad(cfg, qq, r0),
        q,
    )


def _signal_iu_cf(cfg: NetworkConfig, q: np.ndarray, r0: float, theta: float) -> np.ndarray:
    w0, delta0 = network.iu_geometry(r0, theta, cfg.separation)
    pbar = mean_rx_power(cfg, w0)
    if abs(delta0) <= SECTOR_HALF_ANGLE:
        m = cfg.nakagami_m
        g = antenna.gain(cfg.pattern, delta0)
        return (1.0 - 1j * np.asarray(q, dtype=float) * pbar * g / m) ** (-m)
    return _orientation_cf(cfg, q, pbar)


# ---------------------------------------------------------------------------
# outer expectation rules
# ---------------------------------------------------------------------------

def _r0_rule(cfg: NetworkConfig, n: int):
    """Gauss-Legendre against the nearest-BS law, with panel edges at
    equal-mass quantiles so nodes track the measure."""
    panels = max(1, n // 8)
    per_panel = -(-n // panels)  # ceil
    lam_pi = cfg.density * math.pi
    c0 = math.exp(-lam_pi * cfg.exclusion_radius ** 2)
    ct = math.exp(-lam_pi * cfg.disk_radius ** 2)
    # clip the top quantile: the last sliver of mass stretches over a
    # huge radial span where the pdf drops by hundreds of orders of
    # magnitude, which wrecks polynomial quadrature; the discarded mass
    # is folded back in by the final normalization
    probs = np.linspace(0.0, 1.0 - 1e-9, panels + 1)
    edges = np.sqrt(-np.log(c0 - probs * (c0 - ct)) / lam_pi)
    edges[0] = cfg.exclusion_radius
    edges[-1] = min(edges[-1], cfg.disk_radius)
    # the IU signal term switches between served-sector and random-beam
    # branches at radii below ~2d, so extra panel edges go there to keep
    # the kinks away from wide panels
    band_top = 2.5 * cfg.separation
    if cfg.exclusion_radius < band_top < edges[-1]:
        extra = np.geomspace(cfg.exclusion_radius, band_top, max(3, panels // 2) + 1)
        edges = np.unique(np.concatenate([extra[1:], edges]))
    x, wgt = roots_legendre(per_panel)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wgt[None, :]).ravel()
    weights = weights * network.nearest_bs_pdf(cfg, nodes)
    weights = weights / weights.sum()
    return nodes, weights


def _gain_break_levels(cfg: NetworkConfig) -> list[float]:
    """Offsets |delta0| where the IU signal term is not smooth: the
    served-sector edge pi/3 (branch jump) plus the pattern-specific
    discontinuity (flat-top step) or edge of the radiating support."""
    levels = [SECTOR_HALF_ANGLE]
    pat = cfg.pattern
    if pat.kind == "flat_top":
        levels.append(pat.phi_3db)
    elif pat.kind in ("truncated_cos", "multi_cos"):
        # every null 2i/N is a sharp feature: the gain vanishes there, so
        # the conditional law collapses to interference-only in a narrow
        # layer around each crossing
        k_hi = pat.k_max + 1 if pat.kind == "multi_cos" else 1
        for i in range(1, k_hi + 1):
            g = 2.0 * i / pat.n_elements
            if g < SECTOR_HALF_ANGLE:
                levels.append(g)
    return levels


def _level_crossings(cfg: NetworkConfig, r0: float, g: float) -> list[float]:
    """Angles theta where |delta0(r0, theta)| = g.

    Squaring the law-of-cosines relation gives cos theta =
    (r0 sin^2 g +- cos g sqrt(d^2 - r0^2 sin^2 g))/d; spurious roots from
    the squaring only add harmless extra panel edges."""
    d = cfg.separation
    sg, cg = math.sin(g), math.cos(g)
    disc = d * d - (r0 * sg) ** 2
    if disc <= 0:
        return []
    out = []
    for sgn in (1.0, -1.0):
        c = (r0 * sg * sg + sgn * cg * math.sqrt(disc)) / d
        if -1.0 < c < 1.0:
            out.append(math.acos(c))
    return out


def _theta_rule(cfg: NetworkConfig, r0: float, n: int):
    """Average over the serving-BS angle, folded onto (0, pi) by the
    even symmetry of the CF in theta.

    The IU signal branch is only piecewise smooth in theta, so the rule
    is Gauss-Legendre on the pieces between gain-break crossings; without
    crossings a uniform midpoint rule is spectrally accurate."""
    k = max(2, n // 2)
    crossings = []
    if cfg.separation > 0:
        for g in _gain_break_levels(cfg):
            crossings.extend(_level_crossings(cfg, r0, g))
    crossings = sorted(set(crossings))
    if not crossings:
        nodes = (np.arange(k) + 0.5) * math.pi / k
        weights = np.full(k, 1.0 / k)
        return nodes, weights
    edges = np.array([0.0] + crossings + [math.pi])
    per_panel = max(4, -(-k // (edges.size - 1)))
    x, wgt = roots_legendre(per_panel)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wgt[None, :]).ravel() / math.pi
    return nodes, weights


# ---------------------------------------------------------------------------
# EMFE CDFs
# ---------------------------------------------------------------------------

def _emfe_cf_builder(cfg: NetworkConfig, user, quad: QuadratureSpec):
    """Averaged-CF provider phi_E(q) for one user kind.

    AU: serving-beam signal times interference, averaged over r0.
    IU: theta-averaged signal from the serving BS times interference.
    RU: interference of the whole process seen from the exclusion edge.
    """
    kind = UserKind.parse(user)
    if kind is UserKind.RANDOM:
        r_edge = cfg.exclusion_radius

        def cf_ru(q):
            return _interference_cf(cfg, np.asarray(q, dtype=float), r_edge)

        return cf_ru

    r_nodes, r_weights = _r0_rule(cfg, quad.r0_nodes)
    if kind is UserKind.ACTIVE:

        def cf_au(q):
            q = np.asarray(q, dtype=float)
            total = np.zeros(q.shape, dtype=complex)
            for rk, wk in zip(r_nodes, r_weights):
                total += wk * cf.cf_signal_au(cfg, q, rk) * _interference_cf(cfg, q, rk)
            return total

        return cf_au

    th_rules = [_theta_rule(cfg, rk, quad.theta_nodes) for rk in r_nodes]

    def cf_iu(q):
        q = np.asarray(q, dtype=float)
        total = np.zeros(q.shape, dtype=complex)
        for rk, wk, (th_nodes, th_weights) in zip(r_nodes, r_weights, th_rules):
            sig = np.zeros(q.shape, dtype=complex)
            for tj, wj in zip(th_nodes, th_weights):
                sig += wj * _signal_iu_cf(cfg, q, rk, tj)
            total += wk * sig * _interference_cf(cfg, q, rk)
        return total

    return cf_iu


def emfe_cdf(cfg: NetworkConfig, user, t_e, quad: QuadratureSpec | None = None):
    """F_EMFE(T_e) = P[exposure < T_e] for the given user kind.

    t_e in watts (scalar or array).
    """
    quad = quad or DEFAULT_QUAD
    t_arr = np.asarray(t_e, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("EMFE threshold must be positive")
    provider = _emfe_cf_builder(cfg, user, quad)
    return gil_pelaez_cdf(provider, t_e, quad)


def emfe_curve(cfg: NetworkConfig, user, thresholds, quad: QuadratureSpec | None = None) -> CdfCurve:
    values = emfe_cdf(cfg, user, thresholds, quad)
    return CdfCurve(
        thresholds=np.asarray(thresholds, dtype=float),
        values=np.asarray(values, dtype=float),
        user_kind=UserKind.parse(user).value,
        metric="EmfeCdf",
        config_hash=cfg.config_hash(),
    )


def signal_and_interference_cdfs(
    cfg: NetworkConfig, user, thresholds, quad: QuadratureSpec | None = None
):
    """Marginal CDFs of the signal-only and interference-only exposure
    components, as separate curves."""
    quad = quad or DEFAULT_QUAD
    kind = UserKind.parse(user)
    t_arr = np.asarray(thresholds, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("thresholds must be positive")

    r_nodes, r_weights = _r0_rule(cfg, quad.r0_nodes)

    def interf_cf(q):
        q = np.asarray(q, dtype=float)
        if kind is UserKind.RANDOM:
            return _interference_cf(cfg, q, cfg.exclusion_radius)
        total = np.zeros(q.shape, dtype=complex)
        for rk, wk in zip(r_nodes, r_weights):
            total += wk * _interference_cf(cfg, q, rk)
        return total

    if kind is UserKind.RANDOM:
        signal_vals = np.ones_like(t_arr, dtype=float)
    else:
        th_rules = [_theta_rule(cfg, rk, quad.theta_nodes) for rk in r_nodes]

        def signal_cf(q):
            q = np.asarray(q, dtype=float)
            total = np.zeros(q.shape, dtype=complex)
            for rk, wk, (th_nodes, th_weights) in zip(r_nodes, r_weights, th_rules):
                if kind is UserKind.ACTIVE:
                    total += wk * cf.cf_signal_au(cfg, q, rk)
                else:
                    for tj, wj in zip(th_nodes, th_weights):
                        total += wk * wj * _signal_iu_cf(cfg, q, rk, tj)
            return total

        signal_vals = np.atleast_1d(gil_pelaez_cdf(signal_cf, t_arr, quad))

    interf_vals = np.atleast_1d(gil_pelaez_cdf(interf_cf, t_arr, quad))
    meta = dict(user_kind=kind.value, metric="EmfeCdf", config_hash=cfg.config_hash())
    return (
        CdfCurve(thresholds=t_arr, values=signal_vals, method="analytic-signal", **meta),
        CdfCurve(thresholds=t_arr, values=interf_vals, method="analytic-interference", **meta),
    )


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------

def _sinr_cf_builder(cfg: NetworkConfig, tc: float, quad: QuadratureSpec):
    """CF of S - T_c I averaged over r0; the noise term becomes the
    Gil-Pelaez threshold T_c sigma^2."""
    r_nodes, r_weights = _r0_rule(cfg, quad.r0_nodes)

    def cf_sinr(q):
        q = np.asarray(q, dtype=float)
        total = np.zeros(q.shape, dtype=complex)
        for rk, wk in zip(r_nodes, r_weights):
            total += wk * cf.cf_signal_au(cfg, q, rk) * _interference_cf(cfg, -tc * q, rk)
        return total

    return cf_sinr


def coverage_ccdf(cfg: NetworkConfig, t_c, quad: QuadratureSpec | None = None):
    """F_cov(T_c) = P[SINR > T_c]; t_c is the linear SINR threshold."""
    quad = quad or DEFAULT_QUAD
    tc_arr = np.atleast_1d(np.asarray(t_c, dtype=float))
    if np.any(tc_arr <= 0):
        raise ValueError("SINR threshold must be positive")
    sigma2 = noise_power(cfg)
    out = np.empty(tc_arr.shape, dtype=float)
    for i, tc in enumerate(tc_arr):
        provider = _sinr_cf_builder(cfg, float(tc), quad)
        out[i] = _clamp_probability(
            1.0 - gil_pelaez_cdf(provider, tc * sigma2, quad)
        )
    if np.ndim(t_c) == 0:
        return float(out[0])
    return out


def snr_ccdf(cfg: NetworkConfig, t_c, quad: QuadratureSpec | None = None):
    """Coverage with the interference term removed: exact gamma CCDF of
    the serving-beam signal, averaged over r0."""
    quad = quad or DEFAULT_QUAD
    tc_arr = np.atleast_1d(np.asarray(t_c, dtype=float))
    if np.any(tc_arr <= 0):
        raise ValueError("SNR threshold must be positive")
    sigma2 = noise_power(cfg)
    r_nodes, r_weights = _r0_rule(cfg, quad.r0_nodes)
    pbar = mean_rx_power(cfg, r_nodes)
    m = cfg.nakagami_m
    # P[pbar h^2 > tc sigma^2] with h^2 ~ gamma(m, 1/m)
    x = m * sigma2 * tc_arr[:, None] / pbar[None, :]
    out = gammaincc(m, x) @ r_weights
    if np.ndim(t_c) == 0:
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# SCAIU
# ---------------------------------------------------------------------------

def _gamma_tensor(cfg: NetworkConfig, dev1, dev2, weights) -> np.ndarray:
    """exp(pi lam int (A1 + A2 + A1 A2) dU) on the tensor grid spanned
    by the two deviation profiles (rows: q, columns: q')."""
    lam_pi = math.pi * cfg.density
    s1 = dev1 @ weights
    s2 = dev2 @ weights
    cross = (dev1 * weights[None, :]) @ dev2.T
    return np.exp(lam_pi * (s1[:, None] + s2[None, :] + cross))


# default bracket of EMFE thresholds the cached q'-grids must support
_TE_HINT_MAX = 1e-3  # 0 dBm


class ScaiuEvaluator:
    """Joint SINR/EMFE metric at fixed (cfg, T_c), cheap to sweep in T_e.

    The double Gil-Pelaez integral of the coupling term factorizes per
    serving-BS node into q- and q'-contractions; everything that does
    not depend on T_e (the gamma tensors contracted against the SINR
    side) is precomputed here.
    """

    def __init__(self, cfg: NetworkConfig, t_c: float, quad: QuadratureSpec | None = None):
        if cfg.pattern.kind not in ("multi_cos", "truncated_cos"):
            raise ValueError(
                "SCAIU closed form requires the cosine-lobe patterns; "
                f"got {cfg.pattern.kind!r}"
            )
        if t_c <= 0:
            raise ValueError("SINR threshold must be positive")
        self.cfg = cfg
        self.t_c = float(t_c)
        self.quad = quad or DEFAULT_QUAD
        self.sigma2 = noise_power(cfg)
        self.gamma_method = "pgfl-quadrature"
        self.coverage = coverage_ccdf(cfg, t_c, self.quad)
        self._iu_plan = GilPelaezPlan(
            _emfe_cf_builder(cfg, UserKind.IDLE, self.quad), self.quad, _TE_HINT_MAX
        )
        self._build_nodes()

    def _build_nodes(self):
        cfg, quad, tc = self.cfg, self.quad, self.t_c
        r_nodes, r_weights = _r0_rule(cfg, quad.r0_nodes)
        u_t = cfg.disk_radius ** 2 + cfg.bs_height ** 2
        ppd = quad.joint_q_nodes_per_decade
        self._cells = []
        worst_atom = 0.0
        for rk, wk in zip(r_nodes, r_weights):
            th_nodes, th_weights = _theta_rule(cfg, rk, quad.theta_nodes)
            q, _, _, atom_q = _build_inversion_grid(
                lambda qq: cf.cf_signal_au(cfg, qq, rk)
                * _interference_cf(cfg, -tc * qq, rk),
                quad,
                tc * self.sigma2,
                ppd,
            )

            def iu_cf_at_r0(qq, _rk=rk):
                sig = np.zeros(qq.shape, dtype=complex)
                for tj, wj in zip(th_nodes, th_weights):
                    sig += wj * _signal_iu_cf(cfg, qq, _rk, tj)
                return sig * _interference_cf(cfg, qq, _rk)

            qp, _, _, atom_qp = _build_inversion_grid(iu_cf_at_r0, quad, _TE_HINT_MAX, ppd)
            worst_atom = max(worst_atom, abs(atom_q), abs(atom_qp))

            u0 = rk ** 2 + cfg.bs_height ** 2
            u_nodes, u_weights = cf._radial_rule(u0, u_t, n_panels=16, n_nodes=8)
            # deviation profiles: A(-tc q) = conj(A(tc q)), A(-q') = conj(A(q'))
            dev1 = np.conj(cf.deviation_profile(cfg, tc * q, u_nodes))
            dev2 = cf.deviation_profile(cfg, qp, u_nodes)
            gamma_plus = _gamma_tensor(cfg, dev1, dev2, u_weights)
            gamma_minus = _gamma_tensor(cfg, dev1, np.conj(dev2), u_weights)

            filon_q = FilonGrid(q)
            w_q = filon_q.weights(tc * self.sigma2)
            h_q = w_q * cf.cf_signal_au(cfg, q, rk) / q
            # the head piece [0, q_lo] of the q integral is O(q_lo) by
            # grid construction and is dropped here
            t_plus = h_q @ gamma_plus
            t_minus = h_q @ gamma_minus

            b = np.empty((th_nodes.size, qp.size), dtype=complex)
            for j, tj in enumerate(th_nodes):
                b[j] = _signal_iu_cf(cfg, qp, rk, tj)

            self._cells.append(
                dict(
                    weight=wk,
                    qp=qp,
                    filon_qp=FilonGrid(qp),
                    b=b,
                    t_plus=t_plus,
                    t_minus=t_minus,
                    theta_weights=th_weights,
                )
            )
        if worst_atom > 1e-6:
            # the double integral truncates at the plateau without an
            # analytic tail; flag the bias source once
            logger.warning(
                "joint-metric CF plateaus at up to |%.3g|; "
                "coupling integral may be biased by that order",
                worst_atom,
            )

    def upsilon(self, t_e: float) -> float:
        """The coupling double integral at threshold t_e (watts)."""
        if t_e <= 0:
            raise ValueError("EMFE threshold must be positive")
        if t_e > _TE_HINT_MAX:
            logger.warning(
                "t_e = %.3g W above the cached grid bracket %.3g W; "
                "head-of-grid error may grow",
                t_e,
                _TE_HINT_MAX,
            )
        total = 0.0
        for cell in self._cells:
            qp = cell["qp"]
            w_plus = cell["filon_qp"].weights(t_e)
            w_minus = cell["filon_qp"].weights(-t_e)
            s_plus = cell["b"] @ (cell["t_plus"] * w_plus / qp)
            s_minus = np.conj(cell["b"]) @ (cell["t_minus"] * w_minus / qp)
            # sin A sin B = Re[e^{j(A-B)} - e^{j(A+B)}]/2: difference
            # coupling (s_minus) enters with the positive sign
            eps_theta = 0.5 * np.real(s_minus - s_plus)
            total += cell["weight"] * float(cell["theta_weights"] @ eps_theta)
        return total

    def emfe_iu(self, t_e) -> float | np.ndarray:
        return self._iu_plan.evaluate(t_e)

    def joint(self, t_e: float) -> float:
        """J(T_c, T_e; d) = -1/4 + F_cov/2 + F_EMFE/2 - Upsilon/pi^2."""
        f_emfe = self.emfe_iu(t_e)
        raw = (
            -0.25
            + 0.5 * self.coverage
            + 0.5 * f_emfe
            - self.upsilon(t_e) / math.pi ** 2
        )
        return _clamp_probability(raw)

    def conditional(self, t_e: float) -> float:
        if self.coverage < 1e-12:
            raise DegenerateCoverageError(
                f"coverage probability {self.coverage:.3g} too small to condition on"
            )
        return self.joint(t_e) / self.coverage

    def frechet(self, t_e: float):
        f_emfe = self.emfe_iu(t_e)
        lb = max(0.0, self.coverage + f_emfe - 1.0)
        ub = min(self.coverage, f_emfe)
        return lb, ub


def scaiu(cfg: NetworkConfig, t_c: float, t_e: float, quad: QuadratureSpec | None = None) -> float:
    """P[SINR > T_c and IU exposure < T_e]; thresholds in linear units."""
    return ScaiuEvaluator(cfg, t_c, quad).joint(t_e)


def scaiu_conditional(
    cfg: NetworkConfig, t_c: float, t_e: float, quad: QuadratureSpec | None = None
) -> float:
    """H(T_e | T_c) = J(T_c, T_e) / F_cov(T_c)."""
    return ScaiuEvaluator(cfg, t_c, quad).conditional(t_e)


def frechet_bounds(
    cfg: NetworkConfig, t_c: float, t_e: float, quad: QuadratureSpec | None = None
):
    """Distribution-free sandwich (max(0, F_cov + F_EMFE - 1),
    min(F_cov, F_EMFE)) on the joint metric."""
    quad = quad or DEFAULT_QUAD
    f_cov = coverage_ccdf(cfg, t_c, quad)
    f_emfe = emfe_cdf(cfg, UserKind.IDLE, t_e, quad)
    return max(0.0, f_cov + f_emfe - 1.0), min(f_cov, f_emfe)


# ---------------------------------------------------------------------------
# (N, d) sweeps and contour extraction
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Metric values on an (N, d) grid plus extracted level crossings."""

    n_list: np.ndarray
    d_list: np.ndarray
    values: np.ndarray  # shape (len(d_list), len(n_list)); NaN = failed cell
    level: float
    contour: np.ndarray  # (k, 2) points (n_elements, d_m) on grid edges
    metric: str
    config_hash: str
    method: str = "analytic"

    def write_grid_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_elements", "d_m", "value", "method", "config_hash"])
            for i, d in enumerate(self.d_list):
                for j, n in enumerate(self.n_list):
                    writer.writerow(
                        [int(n), repr(float(d)), repr(float(self.values[i, j])),
                         self.method, self.config_hash]
                    )

    def write_contour_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "n_elements", "d_m"])
            for n, d in self.contour:
                writer.writerow([repr(float(self.level)), repr(float(n)), repr(float(d))])


def _pattern_for(template: AntennaPattern, n: int) -> AntennaPattern:
    k_max = min(template.k_max, antenna.max_side_lobes(n))
    return AntennaPattern(kind=template.kind, n_elements=n, k_max=k_max)


def _edge_crossings(xs, ys, values, level):
    """Linear-interpolation crossings of `level` along both grid axes;
    edges touching NaN cells are skipped."""
    points = []
    nd, nn = values.shape
    for i in range(nd):
        for j in range(nn - 1):
            a, b = values[i, j], values[i, j + 1]
            if np.isnan(a) or np.isnan(b) or a == b:
                continue
            t = (level - a) / (b - a)
            if 0.0 <= t <= 1.0:
                points.append((xs[j] + t * (xs[j + 1] - xs[j]), ys[i]))
    for j in range(nn):
        for i in range(nd - 1):
            a, b = values[i, j], values[i + 1, j]
            if np.isnan(a) or np.isnan(b) or a == b:
                continue
            t = (level - a) / (b - a)
            if 0.0 <= t <= 1.0:
                points.append((xs[j], ys[i] + t * (ys[i + 1] - ys[i])))
    points.sort(key=lambda p: (p[1], p[0]))
    return np.array(points, dtype=float).reshape(-1, 2)


def contour_sweep(
    cfg_template: NetworkConfig,
    n_list,
    d_list,
    metric: str,
    level: float,
    quad: QuadratureSpec | None = None,
    t_e: float | None = None,
    t_c: float | None = None,
) -> SweepResult:
    """Evaluate a metric on the (N, d) grid and extract the level set.

    metric is "EmfeCdf" (needs t_e) or "Scaiu" (needs t_c and t_e);
    thresholds in linear units.  Failed cells are NaN and excluded from
    contour interpolation.
    """
    quad = quad or DEFAULT_QUAD
    n_arr = np.asarray(list(n_list), dtype=int)
    d_arr = np.asarray(list(d_list), dtype=float)
    if n_arr.size == 0 or d_arr.size == 0:
        raise ValueError("n_list and d_list must be nonempty")
    if np.any(np.diff(n_arr) <= 0) or np.any(np.diff(d_arr) <= 0):
        raise ValueError("n_list and d_list must be strictly ascending")
    if metric == "EmfeCdf":
        if t_e is None:
            raise ValueError("EmfeCdf sweep needs t_e")
    elif metric == "Scaiu":
        if t_e is None or t_c is None:
            raise ValueError("Scaiu sweep needs t_c and t_e")
    else:
        raise ValueError(f"unknown sweep metric {metric!r}; expected EmfeCdf or Scaiu")

    values = np.full((d_arr.size, n_arr.size), np.nan)
    for j, n in enumerate(n_arr):
        pattern = _pattern_for(cfg_template.pattern, int(n))
        for i, d in enumerate(d_arr):
            cfg = replace(cfg_template, pattern=pattern, separation=float(d))
            try:
                if metric == "EmfeCdf":
                    values[i, j] = emfe_cdf(cfg, UserKind.IDLE, t_e, quad)
                else:
                    values[i, j] = scaiu(cfg, t_c, t_e, quad)
            except (MetricsError, ConvergenceError, network.ConfigError) as exc:
                logger.warning("sweep cell N=%d d=%.3g failed: %s", n, d, exc)

    contour = _edge_crossings(n_arr.astype(float), d_arr, values, level)
    return SweepResult(
        n_list=n_arr,
        d_list=d_arr,
        values=values,
        level=float(level),
        contour=contour,
        metric=metric,
        config_hash=cfg_template.config_hash(),
    )

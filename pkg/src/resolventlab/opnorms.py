"""Lower bounds and grid-exact values for L^p operator norms of spectral multipliers.

Norms of projections are computed through TT*: the L^2 -> L^p norm is
maximized by a projected power iteration over coefficient vectors, and the
L^{p'} -> L^p value is its square. Resolvent lower bounds maximize
||T f||_p / ||f||_{p'} over a finite witness space by gradient ascent.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import fft as spfft

from .expsums import shell_norm_range, shell_points
from .grids import GridSpec, SphereSpace, TorusSpace, lp_norm
from .multipliers import ComplexShift, sommerfeld_array
from .special import CutoffSuite, sphere_volume, zonal_projector_kernel
from .spectra import (ModelManifold, SpectrumTable, shell_count, sphere_spectrum, torus_spectrum)

TWO_PI = 2.0 * math.pi


@dataclass
class AscentConfig:
    restarts: int = 2  # seeded random starts on top of the mandatory ones
    iterations: int = 200
    tol: float = 1e-9
    seed: int = 0


@dataclass
class NormEstimate:
    value: float
    kind: str  # lower_bound_ascent | grid_exact_kernel_sup | tt_star_squared
    p_in: float
    p_out: float
    restarts: int = 0
    iterations: int = 0
    grid: Optional[GridSpec] = None
    witness: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    meta: dict = field(default_factory=dict)

    @property
    def witness_hash(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.witness, dtype=complex).tobytes()).hexdigest()[:16]

    def record(self) -> dict:
        return {
            "inputs": {"p_in": self.p_in, "p_out": self.p_out, "restarts": self.restarts, **self.meta},
            "estimate": self.value, "kind": self.kind, "witness_hash": self.witness_hash,
            "grid": self.grid.describe() if self.grid else None, "iterations": self.iterations,
        }


@dataclass
class OperatorSpec:
    """Fourier multiplier: ``keys`` are lattice modes (torus, shape (M, n)) or degrees (sphere)."""

    manifold: ModelManifold
    keys: np.ndarray
    coeffs: np.ndarray
    description: str = ""

    def space(self, p: float = 4.0):
        if self.manifold.kind == "torus":
            return TorusSpace(self.keys, p=p)
        return SphereSpace(self.manifold.n, self.keys, p=p)

    def basis_coeffs(self, space) -> np.ndarray:
        """Multiplier value attached to each basis function of ``space``."""
        if self.manifold.kind == "torus":
            return np.asarray(self.coeffs, dtype=complex)
        lookup = dict(zip((int(k) for k in self.keys), self.coeffs))
        return np.array([lookup[int(d)] for d in space.degree_of], dtype=complex)


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    predicted: float
    tolerance: float

    @property
    def verdict(self) -> str:
        return "pass" if abs(self.slope - self.predicted) <= self.tolerance else "fail"


# -- spaces and windows -------------------------------------------------------

def _table_for(manifold: ModelManifold, lam_hi: float) -> SpectrumTable:
    if manifold.kind == "torus":
        return torus_spectrum(manifold.n, max(lam_hi, 1e-9))
    if manifold.kind == "sphere":
        k = 0
        while math.sqrt(k * (k + manifold.n - 1)) <= lam_hi:
            k += 1
        return sphere_spectrum(manifold.n, k)
    raise ValueError("norm estimates need a torus or sphere manifold")


def window_keys(manifold: ModelManifold, lam: float, eps: float) -> np.ndarray:
    """Integer keys (|k|^2 on the torus, degree on the sphere) of the levels in [lam - eps, lam + eps]."""
    table = _table_for(manifold, lam + eps + 1.0)
    i0 = np.searchsorted(table.levels, lam - eps, side="left")
    i1 = np.searchsorted(table.levels, lam + eps, side="right")
    return np.asarray(table.keys[i0:i1], dtype=np.int64)


def _torus_modes(n: int, keys) -> np.ndarray:
    parts = [shell_points(n, int(m), int(m)) for m in keys]
    return np.concatenate(parts) if parts else np.zeros((0, n), dtype=np.int64)


def make_space(manifold: ModelManifold, keys, p: float):
    if manifold.kind == "torus":
        return TorusSpace(_torus_modes(manifold.n, keys), p=p)
    return SphereSpace(manifold.n, keys, p=p)


def window_operator(manifold: ModelManifold, lam: float, eps: float) -> OperatorSpec:
    keys = window_keys(manifold, lam, eps)
    if manifold.kind == "torus":
        keys = _torus_modes(manifold.n, keys)
    return OperatorSpec(manifold, keys, np.ones(len(keys), dtype=complex), f"window[{lam}+-{eps}]")


def apply_operator(op: OperatorSpec, u, p: float = 4.0, space=None) -> np.ndarray:
    """Grid samples of sum m(k) u_k e_k; ``u`` is a coefficient vector or grid samples."""
    space = space or op.space(p)
    u = np.asarray(u)
    if u.shape == space.grid.shape:
        u = space.analyze(u)
    if u.shape != (len(space),):
        raise ValueError("coefficient vector does not match the operator's basis")
    return space.synth(op.basis_coeffs(space) * u)


def lp_grid_norm(space, f, p: float) -> float:
    return lp_norm(space, f, p)


# -- ascent -------------------------------------------------------------------

def _normalize(c):
    nrm = np.linalg.norm(c)
    return c / nrm if nrm > 0 else c


def _dual_power(f, p):
    a = np.abs(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, a ** (p - 2) * f, 0.0)
    return out


def ascend_l2_to_lp(space, p: float, c0, weight=None, iterations: int = 200, tol: float = 1e-9):
    """Maximize ||synth(weight * c)||_p over unit-l2 c by projected power iteration.

    The update c <- normalize(conj(w) * <|g|^{p-2} g, e_j>) never decreases the
    objective (convexity of ||.||_p^p); a halving safeguard guards against
    rounding. Returns (c, value, iterations, history).
    """
    w = np.ones(len(space), dtype=complex) if weight is None else np.asarray(weight, dtype=complex)
    c = _normalize(np.asarray(c0, dtype=complex))
    g = space.synth(w * c)
    val = lp_norm(space, g, p)
    history = [val]
    it = 0
    for it in range(1, iterations + 1):
        d = _normalize(np.conj(w) * space.analyze(_dual_power(g, p)))
        t = 1.0
        while True:
            cand = d if t == 1.0 else _normalize(c + t * (d - c))
            g_new = space.synth(w * cand)
            v_new = lp_norm(space, g_new, p)
            if v_new >= val or t < 1e-6:
                break
            t /= 2
        if v_new < val:
            break
        gain = (v_new - val) / val if val > 0 else 1.0
        c, g, val = cand, g_new, v_new
        history.append(val)
        if gain < tol:
            break
    return c, val, it, history


def _single_mode_norms(space, p: float) -> np.ndarray:
    """||Y_j||_p for every basis function, from 1-d profiles (torus modes are unimodular)."""
    if isinstance(space, TorusSpace):
        return np.ones(len(space))
    scale = (2 * math.pi) ** (space.n - 1) * (0.25 if space.n == 3 else 1.0)
    return (scale * (np.abs(space.profiles) ** p) @ space.wx) ** (1.0 / p)


def _zonal_start(space, point=None) -> np.ndarray:
    if isinstance(space, TorusSpace):
        return np.ones(len(space), dtype=complex)
    if point is None:
        point = np.zeros(space.n + 1)
        point[0] = 1.0
    return np.conj(space.basis_at(point)[0])


def _knapp_start(space, lam: float, eps: float) -> Optional[np.ndarray]:
    if not isinstance(space, TorusSpace):
        return None
    center = np.zeros(space.n)
    center[0] = lam / TWO_PI
    radius = math.sqrt(eps * lam) / TWO_PI
    sel = np.linalg.norm(space.modes - center, axis=1) <= radius
    if not np.any(sel) or np.all(sel):
        return None
    return sel.astype(complex)


def _starts(space, p, cfg: AscentConfig, lam=None, eps=None, extra=None):
    starts = [("constant", np.ones(len(space), dtype=complex))]
    if isinstance(space, SphereSpace):
        starts.append(("zonal", _zonal_start(space)))
    norms = _single_mode_norms(space, p)
    j = int(np.argmax(norms))
    e = np.zeros(len(space), dtype=complex)
    e[j] = 1.0
    starts.append(("single_mode", e))
    if lam is not None and eps is not None:
        kn = _knapp_start(space, lam, eps)
        if kn is not None:
            starts.append(("knapp", kn))
    rng = np.random.default_rng(cfg.seed)
    for r in range(cfg.restarts):
        starts.append((f"random{r}", rng.normal(size=len(space)) + 1j * rng.normal(size=len(space))))
    for name, c in (extra or {}).items():
        starts.append((name, np.asarray(c, dtype=complex)))
    return starts


def _best_l2_to_lp(space, p, cfg, starts, weight=None):
    best = None
    total_it = 0
    for name, c0 in starts:
        c, val, it, _ = ascend_l2_to_lp(space, p, c0, weight, cfg.iterations, cfg.tol)
        total_it += it
        if best is None or val > best[1]:  # first found wins ties
            best = (name, val, c)
    return best, total_it


def _empty_estimate(kind, p_in, p_out, meta):
    return NormEstimate(0.0, kind, p_in, p_out, meta={**meta, "empty": True})


def _conj_exp(p):
    return math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))


def window_norm_lower_bound(manifold: ModelManifold, lam: float, eps: float, p: float,
                            cfg: Optional[AscentConfig] = None, extra_starts=None,
                            cutoffs: Optional[CutoffSuite] = None) -> NormEstimate:
    """Lower bound for the L^{p'} -> L^p norm of the spectral window [lam - eps, lam + eps]."""
    cfg = cfg or AscentConfig()
    if p < 2:
        raise ValueError("p must be >= 2")
    cutoffs = cutoffs or CutoffSuite()
    keys = window_keys(manifold, lam, eps)
    meta = {"manifold": manifold.label(), "lam": lam, "eps": eps, "levels": [int(k) for k in keys],
            "cutoff_profile": cutoffs.profile, "seed": cfg.seed}
    if len(keys) == 0:
        return _empty_estimate("tt_star_squared", _conj_exp(p), p, meta)
    space = make_space(manifold, keys, p)
    meta["dimension"] = len(space)
    if p == 2:
        # orthogonal projection
        c = np.zeros(len(space), dtype=complex)
        c[0] = 1
        return NormEstimate(1.0, "tt_star_squared", 2.0, 2.0, 0, 0, space.grid, c,
                            {**meta, "l2_to_lp": 1.0, "start": "exact"})
    starts = _starts(space, p, cfg, lam, eps, extra_starts)
    (name, val, c), its = _best_l2_to_lp(space, p, cfg, starts)
    return NormEstimate(val * val, "tt_star_squared", _conj_exp(p), p, len(starts), its, space.grid, c,
                        {**meta, "l2_to_lp": val, "start": name})


def _ratio_and_grad(space, m, c, p, q):
    f = space.synth(c)
    g = space.synth(m * c)
    num = lp_norm(space, g, p)
    den = lp_norm(space, f, q)
    grad = (np.conj(m) * space.analyze(_dual_power(g, p)) / num ** p
            - space.analyze(_dual_power(f, q)) / den ** q)
    return num / den, grad


def ascend_ratio(space, m, p: float, c0, iterations: int = 200, tol: float = 1e-9):
    """Maximize ||T f||_p / ||f||_{p'} over f in the span, with backtracking gradient steps."""
    q = _conj_exp(p)
    c = _normalize(np.asarray(c0, dtype=complex))
    val, grad = _ratio_and_grad(space, m, c, p, q)
    step = 0.5
    it = 0
    for it in range(1, iterations + 1):
        gn = np.linalg.norm(grad)
        if gn == 0:
            break
        improved = False
        while step > 1e-8:
            cand = _normalize(c + step * grad / gn)
            v_new, g_new = _ratio_and_grad(space, m, cand, p, q)
            if v_new > val:
                improved = True
                break
            step /= 2
        if not improved:
            break
        gain = (v_new - val) / val
        c, val, grad = cand, v_new, g_new
        step = min(2 * step, 1.0)
        if gain < tol:
            break
    return c, val, it


@dataclass
class TruncationReport:
    k_cutoff: int
    tail_multiplier_sup: float
    tail_ratio: float
    ok: bool


def resolvent_norm_lower_bound(manifold: ModelManifold, shift: ComplexShift, p: float,
                               k_cutoff: Optional[int] = None, cfg: Optional[AscentConfig] = None,
                               band: int = 1, companion: bool = False,
                               cutoffs: Optional[CutoffSuite] = None) -> NormEstimate:
    """Lower bound for ||(Delta + zeta)^{-1}||_{p' -> p} with zeta = (lam + i mu)^2.

    The witness space is spanned by the eigenspaces of the ``band`` levels on
    either side of the level nearest to lam + i mu. The operator is diagonal,
    so the bound is also a bound for the untruncated resolvent.
    """
    cfg = cfg or AscentConfig()
    cutoffs = cutoffs or CutoffSuite()
    reach = abs(shift.lam) + 4.0 * (band + 2) + 2.0
    table = _table_for(manifold, reach)
    dist = np.abs(shift.z - table.levels)
    i_star = int(np.argmin(dist))
    lo, hi = max(0, i_star - band), min(len(table) - 1, i_star + band)
    keys = table.keys[lo:hi + 1]
    mvals = sommerfeld_array(table.levels[lo:hi + 1], shift)
    if manifold.kind == "torus":
        modes = _torus_modes(manifold.n, keys)
        space = TorusSpace(modes, p=p)
        qk = np.einsum("ij,ij->i", modes, modes)
        lookup = dict(zip((int(k) for k in keys), mvals))
        m = np.array([lookup[int(v)] for v in qk])
    else:
        space = SphereSpace(manifold.n, keys, p=p)
        lookup = dict(zip((int(k) for k in keys), mvals))
        m = np.array([lookup[int(d)] for d in space.degree_of])
    # starts concentrated on the nearest level
    near = (space.degree_of == table.keys[i_star]) if isinstance(space, SphereSpace) else \
        (np.einsum("ij,ij->i", space.modes, space.modes) == table.keys[i_star])
    starts = []
    zon = _zonal_start(space)
    starts.append(("zonal_nearest", np.where(near, zon, 0)))
    starts.append(("zonal_band", zon))
    norms = np.where(near, _single_mode_norms(space, p), -1)
    e = np.zeros(len(space), dtype=complex)
    e[int(np.argmax(norms))] = 1
    starts.append(("single_mode", e))
    rng = np.random.default_rng(cfg.seed)
    for r in range(cfg.restarts):
        starts.append((f"random{r}", rng.normal(size=len(space)) + 1j * rng.normal(size=len(space))))
    best = None
    its = 0
    for name, c0 in starts:
        c, val, it = ascend_ratio(space, m, p, c0, cfg.iterations, cfg.tol)
        its += it
        if best is None or val > best[1]:
            best = (name, val, c)
    name, val, c = best
    # truncation: the discarded levels beyond the cutoff carry multipliers of size ~ level^-2
    if k_cutoff is None:
        k_cutoff = int(table.keys[hi])
    tail_level = _first_level_beyond(manifold, k_cutoff)
    tail_sup = abs(1.0 / (shift.zeta - tail_level ** 2)) if tail_level is not None else 0.0
    trunc = TruncationReport(int(k_cutoff), tail_sup, tail_sup / val if val else math.inf, tail_sup <= 1e-3 * val)
    meta = {"manifold": manifold.label(), "lam": shift.lam, "mu": shift.mu,
            "nearest_level": float(table.levels[i_star]), "nearest_key": int(table.keys[i_star]),
            "dist_to_spectrum": float(dist[i_star]), "witness_levels": [int(k) for k in keys],
            "start": name, "truncation": trunc.__dict__, "cutoff_profile": cutoffs.profile,
            "seed": cfg.seed, "multiplier_abs_sum": float(np.sum(np.abs(m)))}
    if companion:
        w = window_norm_lower_bound(manifold, float(table.levels[i_star]), 1e-9, p, cfg)
        meta["single_cluster_bound"] = abs(mvals[i_star - lo]) * w.value
    return NormEstimate(val, "lower_bound_ascent", _conj_exp(p), p, len(starts), its, space.grid, c, meta)


def _first_level_beyond(manifold: ModelManifold, key: int) -> Optional[float]:
    if manifold.kind == "sphere":
        k = key + 1
        return math.sqrt(k * (k + manifold.n - 1))
    # torus: next integer represented as a sum of n squares
    m = key + 1
    while not len(shell_points(manifold.n, m, m)):
        m += 1
    return TWO_PI * math.sqrt(m)


def kernel_sup_norm(op: OperatorSpec, oversample: float = 2.0, angles: int = 20001) -> NormEstimate:
    """Sup of the integral kernel (the L^1 -> L^inf norm) on a grid."""
    coeffs = np.asarray(op.coeffs, dtype=complex)
    if len(coeffs) == 0 or not np.any(coeffs):
        return NormEstimate(0.0, "grid_exact_kernel_sup", 1.0, math.inf, meta={"description": op.description})
    if op.manifold.kind == "torus":
        modes = np.asarray(op.keys, dtype=np.int64)
        kmax = int(np.max(np.abs(modes)))
        N = spfft.next_fast_len(int(math.ceil(oversample * (2 * kmax + 1))))
        arr = np.zeros((N,) * op.manifold.n, dtype=complex)
        np.add.at(arr, tuple(np.mod(modes, N).T), coeffs)
        vals = np.abs(spfft.ifftn(arr, workers=-1)) * arr.size
        grid = GridSpec("torus", arr.shape, N - 1)
        diag = float(abs(coeffs.sum()))
        value = float(vals.max())
    else:
        t = np.cos(np.linspace(0.0, math.pi, angles))
        K = np.zeros_like(t)
        for k, mk in zip(op.keys, coeffs):
            K = K + mk * zonal_projector_kernel(op.manifold.n, int(k), t)
        vals = np.abs(K)
        value = float(vals.max())
        diag = float(vals[0])
        grid = GridSpec("zonal-angle", (angles,), 0)
    return NormEstimate(value, "grid_exact_kernel_sup", 1.0, math.inf, grid=grid,
                        meta={"description": op.description, "diagonal": diag})


def zoll_blowup_lower_bound(table: SpectrumTable, tau: float, eps: float, n: Optional[int] = None) -> float:
    """(1 / (10 Vol)) tau^{-(n-1)} eps^{-1} #(levels in [tau - eps, tau + eps])."""
    n = table.manifold.n if n is None else n
    count = shell_count(table, tau, eps).count
    if count == 0:
        return 0.0
    return count / (10.0 * table.manifold.volume * tau ** (n - 1) * eps)


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    phi = math.pi * (3 - math.sqrt(5)) * i
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def cap_modes(R: float, eps: float, cap_center=None, rho: Optional[float] = None,
              cutoffs: Optional[CutoffSuite] = None):
    """Modes and weights beta((|k| - R)/eps) of the eps-band, optionally restricted to a rho-cap."""
    cutoffs = cutoffs or CutoffSuite()
    lo, hi = shell_norm_range(R, eps / 4)
    pts = shell_points(3, lo, hi)
    w = cutoffs.beta_window((np.linalg.norm(pts, axis=1) - R) / eps)
    keep = w > 0
    if rho is not None:
        c = np.asarray(cap_center, dtype=float)
        c = R * c / np.linalg.norm(c)
        keep &= np.linalg.norm(pts - c, axis=1) <= rho
    return pts[keep], w[keep]


def cap_window_norm(R: float, eps: float, cap_center=None, rho: Optional[float] = None, p: float = 4.0,
                    cfg: Optional[AscentConfig] = None, cutoffs: Optional[CutoffSuite] = None) -> NormEstimate:
    """Lower bound for max ||sum beta(eps^{-1}(|k| - R)) a_k e_k||_p over unit-l2 a, cap-restricted modes."""
    cfg = cfg or AscentConfig()
    modes, w = cap_modes(R, eps, cap_center, rho, cutoffs)
    meta = {"R": R, "eps": eps, "rho": rho, "modes": int(len(modes))}
    if len(modes) == 0:
        raise ValueError("no lattice modes in the cap")
    if p == 2:
        j = int(np.argmax(w))
        c = np.zeros(len(w), dtype=complex)
        c[j] = 1
        return NormEstimate(float(w[j]), "lower_bound_ascent", 2.0, 2.0, witness=c, meta=meta)
    space = TorusSpace(modes, p=p)
    starts = [("constant", w.astype(complex))]
    e = np.zeros(len(w), dtype=complex)
    e[int(np.argmax(w))] = 1
    starts.append(("single_mode", e))
    # Knapp start: modes in a sqrt(eps R) cap around the band direction closest to the cap center
    axis = modes[int(np.argmax(w))] / np.linalg.norm(modes[int(np.argmax(w))])
    kn = np.linalg.norm(modes - R * axis, axis=1) <= math.sqrt(eps * R)
    if np.any(kn):
        starts.append(("knapp", kn * w.astype(complex)))
    rng = np.random.default_rng(cfg.seed)
    for r in range(cfg.restarts):
        starts.append((f"random{r}", rng.normal(size=len(w)) + 1j * rng.normal(size=len(w))))
    (name, val, c), its = _best_l2_to_lp(space, p, cfg, starts, weight=w)
    return NormEstimate(val, "lower_bound_ascent", 2.0, p, len(starts), its, space.grid, c,
                        {**meta, "start": name})


def cap_covering_norm(R: float, eps: float, rho: float, p: float = 4.0, caps: Optional[int] = None,
                      cfg: Optional[AscentConfig] = None) -> NormEstimate:
    """K_p over a deterministic Fibonacci covering of the R-sphere by rho-caps."""
    caps = caps or max(4, int(math.ceil(4 * (R / rho) ** 2)))
    best = None
    for center in _fibonacci_sphere(caps):
        try:
            est = cap_window_norm(R, eps, center, rho, p, cfg)
        except ValueError:
            continue
        if best is None or est.value > best.value:
            best = est
    if best is None:
        raise ValueError("every cap is empty")
    best.meta["caps"] = caps
    return best


def necsuff_compare(manifold: ModelManifold, lam: float, eps: float, p: float,
                    cfg: Optional[AscentConfig] = None) -> dict:
    """Window side ||chi||/(eps lam) next to the resolvent side at zeta = (lam + i eps)^2."""
    w = window_norm_lower_bound(manifold, lam, eps, p, cfg)
    r = resolvent_norm_lower_bound(manifold, ComplexShift(lam, eps), p, cfg=cfg)
    window_side = w.value / (eps * lam)
    return {"lam": lam, "eps": eps, "p": p, "window": w.value, "window_side": window_side,
            "resolvent": r.value, "ratio": r.value / window_side if window_side else math.inf}


def scaling_fit(samples: Sequence[tuple[float, float]], predicted_exponent: float,
                tolerance: float = 0.15) -> ScalingFit:
    """Least-squares slope of log y against log x."""
    if len(samples) < 4:
        raise ValueError("need at least 4 samples")
    x = np.log([s[0] for s in samples])
    y = np.log([s[1] for s in samples])
    if np.ptp(x) <= 1e-12:
        raise ValueError("degenerate x range")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return ScalingFit(float(slope), float(intercept), resid, float(predicted_exponent), float(tolerance))

"""Lattice shells, additive quadruples and exponential sums on the torus."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import fft as spfft

from .special import CutoffSuite, schwartz_a
from .spectra import representation_counts

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class LatticeShell:
    n: int
    R: float
    eps: float
    points: np.ndarray  # (P, n) int64, lexicographically sorted

    def __len__(self):
        return len(self.points)

    @property
    def norm_range(self) -> tuple[int, int]:
        return shell_norm_range(self.R, self.eps)

    def contains(self, k) -> bool:
        lo, hi = self.norm_range
        m = int(np.dot(k, k))
        return lo <= m <= hi


def shell_norm_range(R: float, eps: float) -> tuple[int, int]:
    """Integer range of |k|^2 with ||k| - R| <= eps."""
    lo = max(R - eps, 0.0)
    return int(math.ceil(lo * lo)), int(math.floor((R + eps) ** 2))


def _ball_points(n: int, m_hi: int) -> np.ndarray:
    r = math.isqrt(m_hi)
    axis = np.arange(-r, r + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts[np.einsum("ij,ij->i", pts, pts) <= m_hi]


def shell_points(n: int, m_lo: int, m_hi: int) -> np.ndarray:
    """All k in Z^n with m_lo <= |k|^2 <= m_hi, sorted lexicographically."""
    if m_hi < m_lo or m_hi < 0:
        return np.zeros((0, n), dtype=np.int64)
    r = math.isqrt(m_hi)
    axis = np.arange(-r, r + 1, dtype=np.int64)
    if n == 2:
        x, y = np.meshgrid(axis, axis, indexing="ij")
        pts = np.stack([x.ravel(), y.ravel()], axis=1)
        q = np.einsum("ij,ij->i", pts, pts)
        return pts[(q >= m_lo) & (q <= m_hi)]
    # slab over the first n-1 coordinates, solve for the last one exactly
    head = _ball_points(n - 1, m_hi)
    hq = np.einsum("ij,ij->i", head, head)
    out = []
    for z in axis:
        q = hq + z * z
        keep = (q >= m_lo) & (q <= m_hi)
        if np.any(keep):
            sel = head[keep]
            out.append(np.column_stack([sel, np.full(len(sel), z, dtype=np.int64)]))
    if not out:
        return np.zeros((0, n), dtype=np.int64)
    pts = np.concatenate(out)
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def lattice_shell(n: int, R: float, eps: float) -> LatticeShell:
    lo, hi = shell_norm_range(R, eps)
    return LatticeShell(n, float(R), float(eps), shell_points(n, lo, hi))


def sphere_points(n: int, R_squared: int) -> np.ndarray:
    return shell_points(n, R_squared, R_squared)


# -- exponential sums ---------------------------------------------------------

def hlawka_sum(R: float, eps: float, x, j_max: Optional[int] = None, check_range: bool = True) -> complex:
    """eps R sum_{0 < |j| <= j_max} e^{i R |j + x|} / |j + x| over j in Z^3."""
    if check_range and not (1 / math.sqrt(R) < eps < 1):
        raise ValueError("need 1/sqrt(R) < eps < 1")
    x = np.asarray(x, dtype=float)
    j_max = int(math.ceil(1 / eps)) if j_max is None else int(j_max)
    js = _ball_points(3, j_max * j_max)
    js = js[np.any(js != 0, axis=1)]
    d = np.linalg.norm(js + x, axis=1)
    return complex(eps * R * np.sum(np.exp(1j * R * d) / d))


def hlawka_abs_sum(R: float, eps: float, x, j_max: Optional[int] = None) -> float:
    """Triangle-inequality ceiling eps R sum 1/|j + x| for the same index set."""
    x = np.asarray(x, dtype=float)
    j_max = int(math.ceil(1 / eps)) if j_max is None else int(j_max)
    js = _ball_points(3, j_max * j_max)
    js = js[np.any(js != 0, axis=1)]
    return float(eps * R * np.sum(1.0 / np.linalg.norm(js + x, axis=1)))


# -- additive quadruples ------------------------------------------------------

_QUAD_LIMIT = 2 ** 62


def _encode(v: np.ndarray, span: int) -> np.ndarray:
    base = 2 * span + 1
    key = np.zeros(len(v), dtype=np.int64)
    for c in range(v.shape[1]):
        key = key * base + (v[:, c] + span)
    return key


def quadruple_count(n: int, R_squared: int) -> tuple[int, int]:
    """(points on |xi|^2 = R^2, number of (xi1..xi4) on it with xi1 + xi2 = xi3 + xi4)."""
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    if R_squared < 1:
        raise ValueError("R_squared must be >= 1")
    pts = sphere_points(n, R_squared)
    P = len(pts)
    if P == 0:
        return 0, 0
    if float(P) ** 3 >= _QUAD_LIMIT:
        raise OverflowError("quadruple count may overflow int64")
    span = 2 * math.isqrt(R_squared)
    # hash every ordered pair sum; quadruples = sum of squared fibre sizes
    sums = (pts[:, None, :] + pts[None, :, :]).reshape(-1, n)
    _, c = np.unique(_encode(sums, span), return_counts=True)
    return P, int(np.sum(c.astype(np.int64) ** 2))


def quadruple_count_bruteforce(n: int, R_squared: int) -> tuple[int, int]:
    """Quartic reference count; only meant for small shells."""
    pts = [tuple(p) for p in sphere_points(n, R_squared)]
    total = 0
    for a in pts:
        for b in pts:
            for c in pts:
                for d in pts:
                    if all(a[i] + b[i] == c[i] + d[i] for i in range(n)):
                        total += 1
    return len(pts), total


def planar_section_count(R_squared: int, direction: Sequence[int], offset: int) -> int:
    """#{xi in Z^3 : |xi|^2 = R^2, xi . direction = offset}."""
    d = np.asarray(direction, dtype=np.int64)
    if d.shape != (3,) or not np.any(d):
        raise ValueError("direction must be a nonzero integer 3-vector")
    if offset * offset > R_squared * int(d @ d):
        return 0
    pts = sphere_points(3, R_squared)
    return int(np.count_nonzero(pts @ d == offset))


# -- mollified band multiplier ------------------------------------------------

def _unit_ball_midpoint(nodes: int, cutoffs: CutoffSuite):
    h = 2.0 / nodes
    axis = -1 + h * (np.arange(nodes) + 0.5)
    g = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    w = cutoffs.eta(g)
    keep = w > 0
    w = w[keep]
    return g[keep], w / w.sum()


def _radial_mollify(f, radii: np.ndarray, support: tuple[float, float], cutoffs: CutoffSuite,
                    scale: float) -> np.ndarray:
    """(f(|.|) * eta_scale)(r) for radial f supported in ``support``, via a 2-d reduction."""
    lo, hi = support
    u = np.linspace(lo, hi, 40001)
    F_inc = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(u) * (f(u[1:]) * u[1:] + f(u[:-1]) * u[:-1]))])

    def F(x):
        return np.interp(x, u, F_inc, left=0.0, right=F_inc[-1])

    xs, ws = np.polynomial.legendre.leggauss(400)
    s = 0.5 * (xs + 1) * scale
    ws = 0.5 * ws * scale
    eta_s = cutoffs.eta_radial(s / scale) / scale ** 3
    out = np.empty_like(radii, dtype=float)
    for i, r in enumerate(radii):
        inner = F(r + s) - F(np.abs(r - s))
        out[i] = 2 * math.pi / r * np.sum(ws * eta_s * s * inner)
    return out


def _fft_sup(modes: np.ndarray, coeffs: np.ndarray, exclude_radius: float = 0.0,
             oversample: float = 1.0) -> float:
    kmax = int(np.max(np.abs(modes))) if len(modes) else 0
    N = spfft.next_fast_len(int(math.ceil(oversample * (2 * kmax + 1))))
    grid = np.zeros((N, N, N), dtype=complex)
    idx = tuple(np.mod(modes, N).T)
    np.add.at(grid, idx, coeffs)
    vals = spfft.ifftn(grid, workers=-1) * N ** 3
    mag = np.abs(vals)
    if exclude_radius > 0:
        ax = np.fft.fftfreq(N)  # signed coordinates in [-1/2, 1/2)
        d2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
        mag = np.where(d2 >= exclude_radius ** 2, mag, 0.0)
    return float(mag.max())


@dataclass(frozen=True)
class GapResult:
    sup: float
    modes: int
    method: str
    at_origin: float


def mollified_gap_kernel_sup(R: float, eps: float, rho: Optional[float] = None, cap_center=(0.0, 0.0, 1.0),
                             cutoffs: Optional[CutoffSuite] = None, eta_scale: float = 1.0,
                             nodes: int = 21, oversample: float = 1.0) -> GapResult:
    """sup_x |sum_k (m - m0)(k) e^{2 pi i k.x}| with m0 = m * eta.

    ``rho=None`` means the full sphere; ``eta_scale=0`` replaces eta by a Dirac mass.
    """
    cutoffs = cutoffs or CutoffSuite(eta_dim=3)
    if rho is not None and rho < math.sqrt(R):
        raise ValueError("cap radius must be >= sqrt(R)")
    reach = eps / 4 + eta_scale
    lo, hi = shell_norm_range(R, reach)
    pts = shell_points(3, lo, hi)

    def band(r):
        return cutoffs.beta_window((np.asarray(r) - R) / eps) ** 2

    norms = np.sqrt(np.einsum("ij,ij->i", pts, pts).astype(float))
    if rho is None:
        m = band(norms)
        if eta_scale == 0:
            m0 = m
        else:
            uniq, inv = np.unique(norms, return_inverse=True)
            m0 = _radial_mollify(band, uniq, (R - eps / 4, R + eps / 4), cutoffs, eta_scale)[inv]
        method = "radial"
    else:
        center = np.asarray(cap_center, dtype=float)
        center = R * center / np.linalg.norm(center)

        def mfun(xi):
            r = np.linalg.norm(xi, axis=-1)
            c = np.linalg.norm(xi - center, axis=-1)
            return (cutoffs.beta_window((r - R) / eps) * cutoffs.beta_window(c / rho)) ** 2

        near = np.linalg.norm(pts - center, axis=1) <= rho / 4 + eta_scale
        pts = pts[near]
        m = mfun(pts.astype(float))
        if eta_scale == 0:
            m0 = m
        else:
            g, w = _unit_ball_midpoint(nodes, cutoffs)
            m0 = np.empty(len(pts))
            for i in range(0, len(pts), 64):
                block = pts[i:i + 64, None, :] - eta_scale * g[None, :, :]
                m0[i:i + 64] = mfun(block) @ w
        method = f"midpoint{nodes}^3"
    coeffs = m - m0
    if not len(pts):
        raise ValueError("no lattice modes in the band")
    return GapResult(_fft_sup(pts, coeffs.astype(complex), oversample=oversample), len(pts), method,
                     float(abs(coeffs.sum())))


# -- band kernel --------------------------------------------------------------

_A_CUT = 400.0


def band_kernel_sup(lam: float, time_scale_exponent: float = 0.25, exclusion_radius: float = 0.25,
                    oversample: float = 1.0) -> dict:
    """Off-diagonal sup of K(v) = sum_k lam^s a(lam^s (lam - 2 pi |k|)) e^{2 pi i k.v} on T^3."""
    s = time_scale_exponent
    scale = lam ** s
    kmax_r = (lam + _A_CUT / scale) / TWO_PI
    m_hi = int(math.floor(kmax_r ** 2))
    m_lo = int(math.ceil((max(lam - _A_CUT / scale, 0.0) / TWO_PI) ** 2))
    pts = shell_points(3, m_lo, m_hi)
    q = np.einsum("ij,ij->i", pts, pts)
    uq, inv = np.unique(q, return_inverse=True)
    weights = scale * schwartz_a(scale * (lam - TWO_PI * np.sqrt(uq.astype(float))))
    coeffs = weights[inv]
    sup = _fft_sup(pts, coeffs.astype(complex), exclude_radius=exclusion_radius, oversample=oversample)
    return {"lam": lam, "s": s, "sup": sup, "diagonal": float(coeffs.sum()), "modes": int(len(pts))}


def unit_band_count(lam: float) -> int:
    """Number of torus modes with |lam - 2 pi |k|| <= 1."""
    r = representation_counts(3, int(((lam + 1) / TWO_PI) ** 2))
    m = np.arange(len(r))
    sel = np.abs(lam - TWO_PI * np.sqrt(m)) <= 1
    return int(r[sel].sum())

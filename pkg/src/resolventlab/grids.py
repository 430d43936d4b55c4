"""Band-limited function spaces on the torus and on S^2, S^3 with exact quadrature grids.

A space holds a finite basis (lattice exponentials or spherical harmonics),
a quadrature grid, and FFT-based maps between coefficient vectors and grid
samples. Grids are sized so that |f|^p integrates exactly for even integer p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as spfft
from scipy import special as sps

from .special import sphere_volume


@dataclass(frozen=True)
class GridSpec:
    kind: str
    shape: tuple
    exact_degree: int

    def describe(self) -> dict:
        return {"kind": self.kind, "shape": list(self.shape), "exact_degree": self.exact_degree}


def _grid_size(max_freq: int, p: float) -> int:
    # trig polynomials of degree q integrate exactly on N > q points
    q = int(math.ceil(max(p, 2.0) * max_freq))
    return spfft.next_fast_len(q + 1)


class TorusSpace:
    """Span of e^{2 pi i k.x} over a finite mode set on R^n / Z^n (unit volume)."""

    volume = 1.0

    def __init__(self, modes, p: float = 4.0, grid_size=None):
        modes = np.asarray(modes, dtype=np.int64)
        if modes.ndim != 2 or len(modes) == 0:
            raise ValueError("need a nonempty (M, n) mode array")
        self.modes = modes
        self.n = modes.shape[1]
        self.max_freq = int(np.max(np.abs(modes)))
        self.N = int(grid_size) if grid_size else _grid_size(self.max_freq, p)
        if self.N < 2 * self.max_freq + 1:
            raise ValueError("grid too coarse to separate the modes")
        self._idx = tuple(np.mod(modes, self.N).T)
        self.grid = GridSpec("torus", (self.N,) * self.n, self.N - 1)

    def __len__(self):
        return len(self.modes)

    @property
    def labels(self):
        return [tuple(int(v) for v in k) for k in self.modes]

    def synth(self, c) -> np.ndarray:
        arr = np.zeros(self.grid.shape, dtype=complex)
        np.add.at(arr, self._idx, c)
        return spfft.ifftn(arr, workers=-1) * arr.size

    def analyze(self, f) -> np.ndarray:
        return spfft.fftn(f, workers=-1)[self._idx] / f.size

    def weights(self):
        return 1.0 / np.prod(self.grid.shape)

    def integrate(self, g) -> float:
        return float(np.real(np.sum(g)) * self.weights())

    def point_values(self, c, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.exp(2j * math.pi * x @ self.modes.T) @ c


def _hopf_profiles(labels, x):
    """Normalized eta-profiles of the S^3 harmonics at x = cos(2 eta)."""
    out = np.empty((len(labels), len(x)))
    c2 = (1 + x) / 2
    s2 = (1 - x) / 2
    for i, (k, m1, m2) in enumerate(labels):
        a, b = abs(m1), abs(m2)
        s = (k - a - b) // 2
        log_h = ((a + b + 1) * math.log(2) - math.log(2 * s + a + b + 1)
                 + sps.gammaln(s + a + 1) + sps.gammaln(s + b + 1)
                 - sps.gammaln(s + a + b + 1) - sps.gammaln(s + 1))
        # int Phi^2 dx * pi^2 / 2^{a+b} = 1
        norm = math.exp(0.5 * ((a + b) * math.log(2) - 2 * math.log(math.pi) - log_h))
        out[i] = norm * c2 ** (a / 2) * s2 ** (b / 2) * sps.eval_jacobi(s, b, a, x)
    return out


class SphereSpace:
    """Span of spherical harmonics of the given degrees on S^n, n in {2, 3}.

    S^3 uses Hopf coordinates z1 = cos(eta) e^{i xi1}, z2 = sin(eta) e^{i xi2}
    with basis e^{i(m1 xi1 + m2 xi2)} cos^{|m1|} sin^{|m2|} P_s^{(|m2|,|m1|)}(cos 2 eta);
    S^2 uses (cos theta, phi) and associated Legendre functions.
    Grid samples have shape (nodes, N) on S^2 and (nodes, N, N) on S^3.
    """

    def __init__(self, n: int, degrees, p: float = 4.0):
        if n not in (2, 3):
            raise NotImplementedError("explicit harmonic bases are implemented for S^2 and S^3 only")
        self.n = n
        self.degrees = sorted({int(k) for k in degrees})
        if not self.degrees or self.degrees[0] < 0:
            raise ValueError("need nonnegative degrees")
        K = self.degrees[-1]
        self.volume = sphere_volume(n)
        self.N = _grid_size(max(K, 1), p)
        q = int(math.ceil(max(p, 2.0) * max(K, 1)))
        if n == 3:
            labels = [(k, m1, m2) for k in self.degrees for m1 in range(-k, k + 1)
                      for m2 in range(-(k - abs(m1)), k - abs(m1) + 1) if (k - abs(m1) - abs(m2)) % 2 == 0]
            nodes = q // 4 + 2
        else:
            labels = [(k, m) for k in self.degrees for m in range(-k, k + 1)]
            nodes = q // 2 + 2
        self.labels = labels
        self.x, self.wx = np.polynomial.legendre.leggauss(nodes)
        if n == 3:
            self.profiles = _hopf_profiles(labels, self.x)
            self.m = np.array([(l[1], l[2]) for l in labels], dtype=np.int64)
            self.grid = GridSpec("sphere3", (nodes, self.N, self.N), q)
            self._w = (self.wx / 4.0)[:, None, None] * (2 * math.pi / self.N) ** 2
        else:
            self.profiles = _legendre_profiles(labels, self.x)
            self.m = np.array([[l[1]] for l in labels], dtype=np.int64)
            self.grid = GridSpec("sphere2", (nodes, self.N), q)
            self._w = self.wx[:, None] * (2 * math.pi / self.N)
        self.degree_of = np.array([l[0] for l in labels], dtype=np.int64)
        self._idx = tuple(np.mod(self.m, self.N).T)
        self._axes = tuple(range(1, self.n))

    def __len__(self):
        return len(self.labels)

    def synth(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=complex)
        arr = np.zeros(self.grid.shape, dtype=complex)
        np.add.at(arr, (slice(None),) + self._idx, (self.profiles * c[:, None]).T)
        size = self.N ** (self.n - 1)
        return spfft.ifftn(arr, axes=self._axes, workers=-1) * size

    def analyze(self, f) -> np.ndarray:
        """L^2 inner products <f, Y_j> by quadrature."""
        F = spfft.fftn(f, axes=self._axes, workers=-1)
        sel = F[(slice(None),) + self._idx]  # (nodes, J)
        scale = (2 * math.pi / self.N) ** (self.n - 1) * (0.25 if self.n == 3 else 1.0)
        return scale * np.einsum("jn,nj->j", self.profiles * self.wx, sel)

    def weights(self):
        return self._w

    def integrate(self, g) -> float:
        return float(np.sum(g * self._w))

    # pointwise evaluation, for checks against the zonal kernel
    def to_coords(self, pts):
        """Map unit vectors in R^{n+1} to this space's coordinates."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.n == 3:
            r1 = np.hypot(pts[:, 0], pts[:, 1])
            r2 = np.hypot(pts[:, 2], pts[:, 3])
            x = np.clip(r1 ** 2 - r2 ** 2, -1, 1)
            return x, np.arctan2(pts[:, 1], pts[:, 0]), np.arctan2(pts[:, 3], pts[:, 2])
        return np.clip(pts[:, 2], -1, 1), np.arctan2(pts[:, 1], pts[:, 0])

    def basis_at(self, pts) -> np.ndarray:
        """(P, J) matrix of basis values at unit vectors ``pts``."""
        coords = self.to_coords(pts)
        x = coords[0]
        if self.n == 3:
            prof = _hopf_profiles(self.labels, x)
            phase = np.exp(1j * (np.outer(coords[1], self.m[:, 0]) + np.outer(coords[2], self.m[:, 1])))
        else:
            prof = _legendre_profiles(self.labels, x)
            phase = np.exp(1j * np.outer(coords[1], self.m[:, 0]))
        return prof.T * phase

    def point_values(self, c, pts) -> np.ndarray:
        return self.basis_at(pts) @ np.asarray(c, dtype=complex)

    def grid_points(self) -> np.ndarray:
        """Unit vectors of all grid nodes, in the grid's array order."""
        ang = 2 * math.pi * np.arange(self.N) / self.N
        if self.n == 3:
            ce = np.sqrt((1 + self.x) / 2)
            se = np.sqrt((1 - self.x) / 2)
            X, A, B = np.meshgrid(np.arange(len(self.x)), ang, ang, indexing="ij")
            return np.stack([ce[X] * np.cos(A), ce[X] * np.sin(A), se[X] * np.cos(B), se[X] * np.sin(B)], axis=-1)
        st = np.sqrt(1 - self.x ** 2)
        X, A = np.meshgrid(np.arange(len(self.x)), ang, indexing="ij")
        return np.stack([st[X] * np.cos(A), st[X] * np.sin(A), self.x[X]], axis=-1)


def _legendre_profiles(labels, x):
    out = np.empty((len(labels), len(x)))
    for i, (l, m) in enumerate(labels):
        am = abs(m)
        lognorm = 0.5 * (math.log((2 * l + 1) / (4 * math.pi)) + sps.gammaln(l - am + 1) - sps.gammaln(l + am + 1))
        val = sps.lpmv(am, l, x) * math.exp(lognorm)
        if m < 0:
            val = val * (-1) ** am
        out[i] = val
    return out


def lp_norm(space, f, p: float) -> float:
    """Quadrature L^p norm of grid samples; p = inf gives the grid maximum."""
    a = np.abs(f)
    if math.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(a ** p * space.weights()) ** (1.0 / p))

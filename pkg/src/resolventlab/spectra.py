"""Exact spectra of sqrt(-Laplacian) on the model manifolds, counting functions and shell statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .special import harmonic_dimension, sphere_volume

TWO_PI = 2.0 * math.pi
DEFAULT_ENUMERATION_CAP = 50_000_000
# Zoll offsets are truncated to this lattice so that containment is exact
# and tiny widths collapse to the cluster center.
_ZOLL_QUANTUM = 2.0 ** -30
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class HorizonError(ValueError):
    """Raised when a query reaches past the enumerated part of a spectrum."""


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ModelManifold:
    kind: str  # "torus", "sphere" or "zoll"
    n: int
    alpha: float = 0.0
    A: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("torus", "sphere", "zoll"):
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.kind == "zoll" and (self.alpha < 0 or self.A <= 0):
            raise ValueError("zoll needs alpha >= 0 and A > 0")

    @property
    def volume(self) -> float:
        if self.kind in ("sphere", "zoll"):
            return sphere_volume(self.n)
        return 1.0

    @property
    def below_theory_dimension(self) -> bool:
        # n = 2 is allowed but flagged as outside the main range n >= 3
        return self.n < 3

    def label(self) -> str:
        if self.kind == "zoll":
            return f"zoll(n={self.n},alpha={self.alpha},A={self.A},seed={self.seed})"
        return f"{self.kind}(n={self.n})"


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """Sorted distinct levels with multiplicities, complete up to ``lambda_max``.

    For the torus ``keys`` holds the integer |k|^2 of each level, for the
    sphere the degree k; for Zoll tables it is the cluster index.
    """

    manifold: ModelManifold
    levels: np.ndarray
    multiplicities: np.ndarray
    lambda_max: float
    keys: Optional[np.ndarray] = None
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=np.int64)
        if levels.ndim != 1 or levels.shape != mult.shape:
            raise ValueError("levels and multiplicities must be matching 1-d arrays")
        if levels.size and (np.any(np.diff(levels) <= 0) or levels[0] < 0):
            raise ValueError("levels must be nonnegative and strictly increasing")
        if np.any(mult <= 0):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "cumulative", np.cumsum(mult))

    def __len__(self):
        return self.levels.size

    def rows(self):
        keys = self.keys if self.keys is not None else [None] * len(self)
        for lam, m, key in zip(self.levels, self.multiplicities, keys):
            yield float(lam), int(m), (None if key is None else int(key))

    def multiplicity_at(self, lam: float, tol: float = 0.0) -> int:
        i = np.searchsorted(self.levels, lam - tol, side="left")
        j = np.searchsorted(self.levels, lam + tol, side="right")
        return int(self.multiplicities[i:j].sum())


@dataclass(frozen=True)
class WindowSpec:
    center: float
    epsilon: float
    count: int
    density_ratio: float


@dataclass(frozen=True)
class DensityPoint:
    lam: float
    epsilon: float
    count: int
    density_ratio: float
    flagged: bool


def _ball_lattice_estimate(n: int, radius: float) -> float:
    # volume of the ball of radius r + sqrt(n)/2 bounds the lattice count from above
    r = radius + math.sqrt(n) / 2
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r ** n


def representation_counts(n: int, m_max: int) -> np.ndarray:
    """r_n(m) = #{k in Z^n : |k|^2 = m} for m = 0..m_max, by exact integer convolution."""
    if m_max < 0:
        return np.zeros(0, dtype=np.int64)
    squares = np.zeros(m_max + 1, dtype=np.int64)
    roots = np.arange(0, math.isqrt(m_max) + 1)
    squares[roots ** 2] = 2
    squares[0] = 1
    r = squares.copy()
    for _ in range(n - 1):
        nxt = np.zeros_like(r)
        for j in roots:
            s = int(j * j)
            nxt[s:] += squares[s] * r[: m_max + 1 - s]
        r = nxt
    return r


def torus_spectrum(n: int, lambda_max: float, cap: int = DEFAULT_ENUMERATION_CAP,
                   counts: Optional[np.ndarray] = None) -> SpectrumTable:
    """Levels 2*pi*sqrt(m) of the flat torus R^n / Z^n with multiplicity r_n(m).

    ``counts`` lets a caller supply precomputed (e.g. cached) r_n values.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    radius = lambda_max / TWO_PI
    if _ball_lattice_estimate(n, radius) > cap:
        raise EnumerationTooLarge(
            f"ball of radius {radius:.3g} in Z^{n} holds more than {cap} lattice points")
    m_max = int(math.floor(radius * radius))
    while m_max > 0 and TWO_PI * math.sqrt(m_max) > lambda_max:
        m_max -= 1
    while TWO_PI * math.sqrt(m_max + 1) <= lambda_max:
        m_max += 1
    if counts is None or len(counts) <= m_max:
        counts = representation_counts(n, m_max)
    counts = np.asarray(counts[: m_max + 1], dtype=np.int64)
    keys = np.nonzero(counts)[0]
    return SpectrumTable(ModelManifold("torus", n), TWO_PI * np.sqrt(keys.astype(float)),
                         counts[keys], float(lambda_max), keys=keys)


def sphere_spectrum(n: int, k_max: int) -> SpectrumTable:
    if n < 2 or k_max < 0:
        raise ValueError("need n >= 2 and k_max >= 0")
    k = np.arange(k_max + 1)
    levels = np.sqrt(k * (k + n - 1.0))
    mult = np.array([harmonic_dimension(n, int(j)) for j in k], dtype=np.int64)
    return SpectrumTable(ModelManifold("sphere", n), levels, mult, float(levels[-1]), keys=k)


def _zoll_offsets(count: int, k: int, width: float, seed: int) -> np.ndarray:
    # Kronecker sequence with a seed- and cluster-dependent shift
    shift = math.modf(seed * math.sqrt(2.0) + k * math.sqrt(3.0))[0] % 1.0
    u = np.mod(shift + _GOLDEN * np.arange(count), 1.0)
    raw = width * (2.0 * u - 1.0)
    return np.trunc(raw / _ZOLL_QUANTUM) * _ZOLL_QUANTUM


def zoll_spectrum(n: int, alpha: float, A: float, k_max: int, seed: int) -> SpectrumTable:
    """Synthetic clustered spectrum: d_k levels within A/k of k + alpha for k = 1..k_max, plus level 0."""
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    manifold = ModelManifold("zoll", n, alpha=float(alpha), A=float(A), seed=int(seed))
    if 1 + alpha - A < 0:
        raise ValueError("first cluster would reach negative frequencies")
    vals = [np.zeros(1)]
    cluster = [np.zeros(1, dtype=np.int64)]
    for k in range(1, k_max + 1):
        d = harmonic_dimension(n, k)
        vals.append((k + alpha) + _zoll_offsets(d, k, A / k, seed))
        cluster.append(np.full(d, k, dtype=np.int64))
    allv = np.concatenate(vals)
    allc = np.concatenate(cluster)
    levels, first, mult = np.unique(allv, return_index=True, return_counts=True)
    horizon = k_max + alpha + A / k_max
    next_low = (k_max + 1 + alpha) - A / (k_max + 1)
    if next_low <= horizon:
        horizon = float(np.nextafter(next_low, -np.inf))
    keep = levels <= horizon
    return SpectrumTable(manifold, levels[keep], mult[keep], float(horizon), keys=allc[first][keep])


def weyl_count(table: SpectrumTable, lam: float) -> int:
    """N(lam) = number of levels <= lam, with multiplicity."""
    if lam < 0:
        return 0
    if lam > table.lambda_max:
        raise HorizonError(f"lambda={lam} exceeds table horizon {table.lambda_max}")
    i = np.searchsorted(table.levels, lam, side="right")
    return int(table.cumulative[i - 1]) if i > 0 else 0


def _count_below(table: SpectrumTable, lam: float) -> int:
    # N(lam-) : levels strictly below lam
    i = np.searchsorted(table.levels, lam, side="left")
    return int(table.cumulative[i - 1]) if i > 0 else 0


def shell_count(table: SpectrumTable, lam: float, epsilon: float) -> WindowSpec:
    """Closed window count N(lam+eps) - N((lam-eps)-)."""
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    count = weyl_count(table, lam + epsilon) - _count_below(table, lam - epsilon)
    n = table.manifold.n
    ratio = count / (epsilon * lam ** (n - 1)) if lam > 0 else float("nan")
    return WindowSpec(float(lam), float(epsilon), int(count), float(ratio))


def density_blowup_scan(table: SpectrumTable, epsilon_rule: Callable[[float], float],
                        lambda_grid: Iterable[float], threshold: float = math.inf) -> list[DensityPoint]:
    out = []
    for lam in lambda_grid:
        eps = float(epsilon_rule(lam))
        w = shell_count(table, float(lam), eps)
        out.append(DensityPoint(w.center, eps, w.count, w.density_ratio, w.density_ratio > threshold))
    return out

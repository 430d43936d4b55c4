"""Special functions and the smooth cutoff family shared by the other modules.

All cutoffs are built from the transition ``exp(-1/x)`` so they are exactly
0 or 1 outside their transition bands.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special as sps


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = _psi(x)
    b = _psi(1.0 - x)
    return a / (a + b)


def _scalar_or_array(x, y):
    return float(y) if np.ndim(x) == 0 else y


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sphere_volume(n: int) -> float:
    """Riemannian volume of the round unit sphere S^n."""
    return sphere_area(n + 1)


def harmonic_dimension(n: int, k: int) -> int:
    """Dimension of degree-k spherical harmonics on S^n (polynomials in n+1 variables)."""
    if k < 0:
        return 0
    d = math.comb(k + n, n)
    if k >= 2:
        d -= math.comb(k + n - 2, n)
    return d


@dataclass(frozen=True)
class CutoffSuite:
    """The concrete smooth cutoffs.

    ``rho`` is the local-time cutoff (1 on t <= delta0/2, 0 on t >= delta0),
    ``b`` the even bump used to split short and long times, ``beta_dyadic``
    a dyadic partition of unity on (1/2, 2), ``beta_window`` the shell profile
    (1 on |s| <= 1/10, 0 on |s| >= 1/4) and ``eta`` a unit-mass bump on the
    unit ball of R^dim.
    """

    delta0: float = 1.0
    eta_dim: int = 3
    profile: str = field(default="exp(-1/x) transitions; a=|a0|^2, a0_hat=exp(-1/(1-4t^2))")

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        h = self.delta0 / 2
        return _scalar_or_array(t, 1.0 - smooth_step((t - h) / h))

    def b(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        return _scalar_or_array(t, 1.0 - smooth_step(t - 1.0))

    def beta_dyadic(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        s = np.log2(t[pos])
        # telescoping difference of a step in log2 t; support is (1/2, 2)
        out[pos] = smooth_step(s + 1.0) - smooth_step(s)
        return _scalar_or_array(t, out)

    def beta_window(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        return _scalar_or_array(s, 1.0 - smooth_step((s - 0.1) / 0.15))

    def eta(self, x):
        """Unit-mass bump supported in the unit ball; ``x`` has shape (..., eta_dim)."""
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out / _eta_mass(self.eta_dim)

    def eta_radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
        return out / _eta_mass(self.eta_dim)

    def describe(self) -> dict:
        return {"delta0": self.delta0, "eta_dim": self.eta_dim, "profile": self.profile}


@lru_cache(maxsize=None)
def _eta_mass(dim: int) -> float:
    val, _ = integrate.quad(lambda r: r ** (dim - 1) * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-13)
    return sphere_area(dim) * val


def bessel_j(order: float, x):
    """Bessel J of integer or half-integer order for x >= 0."""
    if order < 0 or abs(2 * order - round(2 * order)) > 1e-12:
        raise ValueError("order must be a nonnegative integer or half-integer")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    return _scalar_or_array(x, sps.jv(order, x))


def surface_measure_ft(n: int, r):
    """Fourier transform of surface measure on S^{n-1} at |x| = r."""
    if n < 2:
        raise ValueError("n must be >= 2")
    r = np.asarray(r, dtype=float)
    nu = (n - 2) / 2
    out = np.empty_like(r)
    zero = r == 0
    out[zero] = sphere_area(n)
    rr = r[~zero]
    out[~zero] = (2 * math.pi) ** (n / 2) * rr ** (-nu) * sps.jv(nu, rr)
    return _scalar_or_array(r, out)


def gegenbauer(k: int, index: float, x):
    """C_k^{index}(x)."""
    if k < 0 or index <= 0:
        raise ValueError("need k >= 0 and index > 0")
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(x, sps.eval_gegenbauer(int(k), float(index), x))


def zonal_projector_kernel(n: int, k: int, costheta):
    """Kernel H_k(x, y) of the projection onto degree-k harmonics on S^n, as a function of cos d(x, y)."""
    costheta = np.asarray(costheta, dtype=float)
    if np.any(np.abs(costheta) > 1 + 1e-12):
        raise ValueError("|costheta| must be <= 1")
    alpha = (n - 1) / 2
    vol = sphere_volume(n)
    # d_k / C_k^alpha(1) = (k + alpha) / alpha
    val = (k + alpha) / alpha * gegenbauer(k, alpha, np.clip(costheta, -1.0, 1.0)) / vol
    return _scalar_or_array(costheta, val)


# ---------------------------------------------------------------------------
# The Schwartz function a with supp(a_hat) in (-1, 1), a(0) = 1, a >= 0.
# a = (a0 / a0(0))^2 with a0_hat(t) = exp(-1/(1 - 4 t^2)) on (-1/2, 1/2).
# Convention: a(tau) = (1/2pi) int a_hat(t) e^{i t tau} dt.

_A_NODES = 512
_a_lock = threading.Lock()
_a_state: dict = {}


def _a0_hat(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 0.5
    out[inside] = np.exp(-1.0 / (1.0 - 4.0 * t[inside] ** 2))
    return out


def _a_tables():
    if not _a_state:
        with _a_lock:
            if not _a_state:
                x, w = np.polynomial.legendre.leggauss(_A_NODES)
                t = 0.25 * (x + 1.0)  # [0, 1/2]
                w = 0.25 * w
                f = _a0_hat(t)
                mass = 2.0 * np.sum(w * f)  # int a0_hat over (-1/2, 1/2)
                _a_state.update(t=t, wf=w * f, mass=mass)
    return _a_state


def _a0(tau):
    st = _a_tables()
    tau = np.asarray(tau, dtype=float)
    flat = tau.reshape(-1)
    out = np.empty_like(flat)
    chunk = 4096
    for i in range(0, flat.size, chunk):
        part = flat[i:i + chunk]
        out[i:i + chunk] = 2.0 * (np.cos(np.outer(part, st["t"])) @ st["wf"])
    return out.reshape(tau.shape) / (2 * math.pi)


def schwartz_a(tau):
    """Frequency-side values a(tau)."""
    st = _a_tables()
    a00 = st["mass"] / (2 * math.pi)
    tau = np.asarray(tau, dtype=float)
    return _scalar_or_array(tau, (_a0(tau) / a00) ** 2)


def schwartz_a_hat(t):
    """Time-side profile a_hat(t), supported in (-1, 1)."""
    st = _a_tables()
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    for i, ti in enumerate(np.abs(t).ravel()):
        if ti >= 1.0:
            continue
        lo, hi = max(-0.5, ti - 0.5), 0.5
        val, _ = integrate.quad(lambda s: float(_a0_hat(s) * _a0_hat(ti - s)), lo, hi,
                                epsabs=1e-14, epsrel=1e-12, limit=200)
        out.flat[i] = val
    out *= 2 * math.pi / st["mass"] ** 2
    return float(out[0]) if scalar else out


def schwartz_a_eval(t_or_tau, side: str = "frequency"):
    if side == "frequency":
        return schwartz_a(t_or_tau)
    if side == "time":
        return schwartz_a_hat(t_or_tau)
    raise ValueError("side must be 'time' or 'frequency'")

"""Scalar resolvent multipliers and their time-side representations.

For z = lam + i mu the resolvent coefficient on a level lam_j is
1/(z^2 - lam_j^2), and it can be written as

    sgn(mu)/(i z) * int_0^inf e^{i sgn(mu) lam t} e^{-|mu| t} cos(t lam_j) dt.

Splitting the time integral with the cutoff rho gives the localized and the
remainder multipliers.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from .special import CutoffSuite
from .spectra import SpectrumTable

POLE_GUARD = 1e-12
_SLOW_FREQ = 1e-2  # below this |t| the pole-pair tail avoids QAWF


class PoleError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class ComplexShift:
    lam: float
    mu: float

    @property
    def z(self) -> complex:
        return complex(self.lam, self.mu)

    @property
    def zeta(self) -> complex:
        return self.z * self.z

    def dist_to_spectrum(self, table: SpectrumTable) -> float:
        return float(np.min(np.abs(self.z - table.levels)))


@dataclass(frozen=True)
class FourierCheck:
    numeric: complex
    closed: complex
    error_estimate: float

    @property
    def abs_error(self) -> float:
        return abs(self.numeric - self.closed)


def _sgn(x: float) -> float:
    if x == 0:
        raise ValueError("mu must be nonzero")
    return 1.0 if x > 0 else -1.0


def _quad(f, a, b=np.inf, weight=None, wvar=None, epsabs=1e-12, epsrel=1e-10, limit=400):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if weight is None:
                return integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
            if math.isinf(b):
                return integrate.quad(f, a, b, weight=weight, wvar=wvar, epsabs=epsabs, limlst=200)
            # finite QAWO reuses stale Chebyshev moments across calls, so weight explicitly
            trig = np.cos if weight == "cos" else np.sin
            return integrate.quad(lambda x: f(x) * trig(wvar * x), a, b, epsabs=epsabs, epsrel=epsrel,
                                  limit=limit)
        except integrate.IntegrationWarning as exc:
            raise ArithmeticError(f"quadrature did not converge on [{a}, {b}]: {exc}") from exc


# -- Fourier identities -------------------------------------------------------

def heaviside_ft_closed(mu: float, t: float) -> complex:
    """2 pi sgn(mu) H(mu t) e^{-mu t}; at t = 0 the two-sided average pi sgn(mu) is returned."""
    s = _sgn(mu)
    if t == 0:
        return complex(math.pi * s)
    # compare signs, since mu * t can underflow to zero
    return complex(2 * math.pi * s * math.exp(-mu * t)) if (mu > 0) == (t > 0) else 0j


def heaviside_ft_check(mu: float, t: float) -> FourierCheck:
    """Quadrature of int e^{-i tau t} / (mu - i tau) d tau against its closed form.

    The odd part of the integrand integrates to zero, so the value is
    2 int_0^inf (mu cos(tau t) + tau sin(tau t)) / (mu^2 + tau^2) d tau, with the
    infinite Fourier tails handled by QUADPACK's QAWF.
    """
    _sgn(mu)
    w = abs(t)
    sign_t = 1.0 if t >= 0 else -1.0
    if w == 0:
        val, err = _quad(lambda x: mu / (mu * mu + x * x), 0.0)
        return FourierCheck(complex(2 * val), heaviside_ft_closed(mu, t), 2 * err)
    # substitute u = w x: the peak width becomes m = mu w, resolved on [0, 2 pi] before the QAWF tail;
    # subnormal |t| is lifted to 1e-300, which moves e^{-mu t} by far less than rounding
    m = mu * max(w, 1e-300)
    # one breakpoint per decade between the peak width and 2 pi
    decades = int(math.ceil(math.log10(2 * math.pi / abs(m)))) if abs(m) < 2 * math.pi else 0
    pts = list(np.geomspace(abs(m), 2 * math.pi, decades + 1)[:-1]) if decades else []
    # hypot keeps m / (m^2 + u^2) finite when m^2 underflows
    def peak(u):
        h = math.hypot(m, u)
        return m / h / h

    def odd(u):
        h = math.hypot(m, u)
        return u / h / h * math.sin(u) if u > 0 else 0.0

    c0, e0 = integrate.quad(lambda u: peak(u) * math.cos(u), 0.0, 2 * math.pi, points=pts or None,
                            epsabs=1e-13, limit=400)
    s0, e1 = integrate.quad(odd, 0.0, 2 * math.pi, points=pts or None, epsabs=1e-13, limit=400)
    c1, e2 = _quad(lambda u: m / (m * m + u * u), 2 * math.pi, weight="cos", wvar=1.0)
    s1, e3 = _quad(lambda u: u / (m * m + u * u), 2 * math.pi, weight="sin", wvar=1.0)
    val = 2 * ((c0 + c1) + sign_t * (s0 + s1))
    return FourierCheck(complex(val), heaviside_ft_closed(mu, t), 2 * (e0 + e1 + e2 + e3))


def pole_pair_ft_closed(lam: float, mu: float, t: float) -> complex:
    s = _sgn(mu)
    z = complex(lam, mu)
    return 1j * math.pi * s / z * cmath.exp(1j * s * lam * abs(t)) * math.exp(-abs(mu * t))


def pole_pair_ft_check(lam: float, mu: float, t: float) -> FourierCheck:
    """Quadrature of int e^{-i tau t} / (tau^2 - (lam + i mu)^2) d tau against its closed form."""
    _sgn(mu)
    z2 = complex(lam, mu) ** 2
    w = abs(t)

    def re(x):
        return (1.0 / (x * x - z2)).real

    def im(x):
        return (1.0 / (x * x - z2)).imag

    # resolve the peak of width |mu| at tau = |lam| on a finite piece
    peak = abs(lam)
    width = abs(mu)
    edges = sorted({0.0, max(0.0, peak - 8 * width), peak, peak + 8 * width})
    tail_start = peak + 8 * width + 10.0
    edges.append(tail_start)
    total = 0j
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        for part, unit in ((re, 1.0), (im, 1j)):
            if w == 0:
                v, e = _quad(part, a, b)
            else:
                v, e = _quad(part, a, b, weight="cos", wvar=w)
            total += unit * v
            err += e
    if w >= _SLOW_FREQ:
        for part, unit in ((re, 1.0), (im, 1j)):
            v, e = _quad(part, tail_start, weight="cos", wvar=w)
            total += unit * v
            err += e
    else:
        # QAWF cannot resolve very long periods: peel off 1/x^2, whose cosine tail is closed form
        T = tail_start
        si, _ = special.sici(w * T)
        total += math.cos(w * T) / T - w * (math.pi / 2 - si)
        for part, unit in ((lambda x: (z2 / (x * x * (x * x - z2))).real, 1.0),
                           (lambda x: (z2 / (x * x * (x * x - z2))).imag, 1j)):
            v, e = _quad(lambda x: part(x) * math.cos(w * x), T)
            total += unit * v
            err += e
    return FourierCheck(2 * total, pole_pair_ft_closed(lam, mu, t), 2 * err)


# -- multipliers --------------------------------------------------------------

def sommerfeld_multiplier(level: float, shift: ComplexShift) -> complex:
    """Diagonal resolvent coefficient 1/(zeta - level^2)."""
    d = shift.zeta - level * level
    if abs(d) < POLE_GUARD:
        raise PoleError(f"zeta={shift.zeta} is within {POLE_GUARD} of the pole at level {level}")
    return 1.0 / d


def sommerfeld_array(levels, shift: ComplexShift) -> np.ndarray:
    levels = np.asarray(levels, dtype=float)
    d = shift.zeta - levels * levels
    if np.any(np.abs(d) < POLE_GUARD):
        raise PoleError(f"zeta={shift.zeta} hits a pole of the level set")
    return 1.0 / d


def partial_fraction_check(level: float, lam: float, mu: float) -> tuple[complex, complex]:
    """1/(level^2 - z^2) against (1/(2z)) (1/(level - z) - 1/(level + z))."""
    z = complex(lam, mu)
    lhs = 1.0 / (level * level - z * z)
    rhs = (1.0 / (level - z) - 1.0 / (level + z)) / (2 * z)
    return lhs, rhs


def resolvent_difference_identity_check(level: float, lam: float, eps: float) -> tuple[complex, complex]:
    """Closed form of the difference of resolvent coefficients at lam +- i eps, and the direct difference."""
    a = level * level - lam * lam + eps * eps
    b = 2 * eps * lam
    lhs = 4j * eps * lam / (a * a + b * b)
    zp = complex(lam, eps)
    zm = complex(lam, -eps)
    rhs = 1.0 / (level * level - zp * zp) - 1.0 / (level * level - zm * zm)
    return complex(lhs), complex(rhs)


def _exp_integral(c: complex, a: float, b: float) -> complex:
    """int_a^b e^{c t} dt (b may be inf when Re c < 0)."""
    if math.isinf(b):
        return -cmath.exp(c * a) / c
    if abs(c) * (b - a) < 1e-8:
        return (b - a) * (1 + c * (b + a) / 2)
    return (cmath.exp(c * b) - cmath.exp(c * a)) / c


def _weighted_osc(g, decay: float, omega: float, a: float, b: float) -> complex:
    """int_a^b g(t) e^{-decay t} e^{i omega t} dt on a finite interval."""
    def f(t):
        return float(g(t)) * math.exp(-decay * t)

    if omega == 0:
        v, _ = _quad(f, a, b)
        return complex(v)
    c, _ = _quad(f, a, b, weight="cos", wvar=abs(omega))
    s, _ = _quad(f, a, b, weight="sin", wvar=abs(omega))
    return complex(c, math.copysign(1.0, omega) * s)


def _time_integral(part: str, tau: float, lam: float, mu: float, cutoffs: CutoffSuite) -> complex:
    """int_0^inf g(t) e^{i sgn(mu) lam t} e^{-|mu| t} cos(t tau) dt with g = rho or 1 - rho."""
    s = _sgn(mu)
    d0 = cutoffs.delta0
    h = d0 / 2
    decay = abs(mu)
    total = 0j
    for sign in (1.0, -1.0):
        omega = s * lam + sign * tau
        c = complex(-decay, omega)
        if part == "local":
            flat = _exp_integral(c, 0.0, h)
            ramp = _weighted_osc(cutoffs.rho, decay, omega, h, d0)
        else:
            flat = _exp_integral(c, d0, math.inf)
            ramp = _weighted_osc(lambda t: 1.0 - cutoffs.rho(t), decay, omega, h, d0)
        total += 0.5 * (flat + ramp)
    return total


def _prefactor(lam: float, mu: float) -> complex:
    return _sgn(mu) / (1j * complex(lam, mu))


def localized_multiplier(tau: float, lam: float, mu: float, cutoffs: Optional[CutoffSuite] = None) -> complex:
    cutoffs = cutoffs or CutoffSuite()
    return _prefactor(lam, mu) * _time_integral("local", abs(tau), lam, mu, cutoffs)


def remainder_multiplier(tau: float, lam: float, mu: float, cutoffs: Optional[CutoffSuite] = None) -> complex:
    cutoffs = cutoffs or CutoffSuite()
    if lam < 1 or abs(mu) < 1:
        raise ValueError("remainder multiplier is defined here for lam >= 1 and |mu| >= 1")
    return _prefactor(lam, mu) * _time_integral("remainder", abs(tau), lam, mu, cutoffs)


def long_time_multiplier(omega: float, mu: float, cutoffs: Optional[CutoffSuite] = None) -> complex:
    """m(omega) = int_0^inf e^{i omega t} (1 - rho(t)) e^{-mu t} dt for mu > 0."""
    cutoffs = cutoffs or CutoffSuite()
    if mu <= 0:
        raise ValueError("mu must be positive")
    d0 = cutoffs.delta0
    c = complex(-mu, omega)
    flat = _exp_integral(c, d0, math.inf)
    ramp = _weighted_osc(lambda t: 1.0 - cutoffs.rho(t), mu, omega, d0 / 2, d0)
    return flat + ramp


def band_envelope(omega, mu: float, N: int = 3):
    omega = np.abs(np.asarray(omega, dtype=float))
    return (1 + omega) ** (-N) + (1 + omega / mu) ** (-N) / mu


@dataclass(frozen=True)
class EnvelopeReport:
    lam: float
    mu: float
    C3: float
    peak_value: float  # |m| at tau = lam
    argmax_tau: float


def band_envelope_check(lam: float, mu: float, cutoffs: Optional[CutoffSuite] = None,
                        tau_grid=None) -> EnvelopeReport:
    """Smallest C with |m(lam - tau)| <= C * envelope over a tau grid (N = 3)."""
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    if lam < 1:
        raise ValueError("lam must be >= 1")
    cutoffs = cutoffs or CutoffSuite()
    if tau_grid is None:
        tau_grid = lam + np.concatenate([-np.geomspace(lam, 1e-3, 40), [0.0], np.geomspace(1e-3, 3 * lam, 40)])
    tau_grid = np.asarray(tau_grid, dtype=float)
    vals = np.array([abs(long_time_multiplier(lam - t, mu, cutoffs)) for t in tau_grid])
    ratios = vals / band_envelope(lam - tau_grid, mu)
    i = int(np.argmax(ratios))
    return EnvelopeReport(lam, mu, float(ratios[i]), abs(long_time_multiplier(0.0, mu, cutoffs)),
                          float(tau_grid[i]))


def remainder_decay_constant(lam: float, mus, taus, cutoffs: Optional[CutoffSuite] = None) -> float:
    """max over (mu, tau) of |r(tau)| * lam * (1 + |lam - tau|)^3."""
    best = 0.0
    for mu in mus:
        for tau in taus:
            v = abs(remainder_multiplier(tau, lam, mu, cutoffs)) * lam * (1 + abs(lam - tau)) ** 3
            best = max(best, v)
    return best

"""Marchenko-Pastur law, its linearization and their Stieltjes transforms.

All transform evaluators accept scalars or arrays.  ``m_inf`` is the
Stieltjes transform of the MP density; ``m_lin(z) = z * m_inf(z**2)`` is the
transform of the symmetric law of ``±sqrt(x)``, which at ``gamma = 1`` is the
semicircle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from .errors import BranchAmbiguity, ConfigError, QuadratureFailure

QUAD_TOL = 1e-12


@dataclass(frozen=True)
class MPParams:
    gamma: float

    def __post_init__(self):
        g = float(self.gamma)
        if not 0.0 < g <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_config(cls, config) -> "MPParams":
        return cls(float(Fraction(config.N, config.M)))

    @property
    def lambda_minus(self) -> float:
        return (1.0 - math.sqrt(self.gamma)) ** 2

    @property
    def lambda_plus(self) -> float:
        return (1.0 + math.sqrt(self.gamma)) ** 2

    @property
    def width(self) -> float:
        return self.lambda_plus - self.lambda_minus


@dataclass(frozen=True)
class ControlParams:
    """Scale parameters entering the error bounds.

    ``xi`` defaults to ``max(log(N)**2, e)``.
    """

    N: int
    d_b: int
    gamma: float = 1.0
    xi: float | None = None
    mp: MPParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1 or self.d_b < 1:
            raise ConfigError(f"N and d_b must be positive, got N={self.N}, d_b={self.d_b}")
        xi = self.xi if self.xi is not None else max(math.log(self.N) ** 2, math.e)
        if xi < math.e:
            raise ConfigError(f"xi must be >= e, got {xi}")
        object.__setattr__(self, "xi", float(xi))
        object.__setattr__(self, "mp", MPParams(self.gamma))

    @property
    def D(self) -> float:
        return min(float(self.d_b), self.N ** 2 / self.d_b ** 3)

    def Phi(self, z):
        eta = np.abs(np.imag(z))
        return (self.N * eta) ** -0.5 + self.D ** -0.5

    def F(self, z, r):
        return F(z, r, self.mp)


@dataclass(frozen=True)
class StieltjesValue:
    z: complex
    m_inf: complex
    m_inf_plus: complex
    m_lin: complex
    m_lin_plus: complex


def _params(params) -> MPParams:
    return params if isinstance(params, MPParams) else MPParams(params)


# -- densities --------------------------------------------------------------

def rho_mp(x, params):
    """MP density; zero off the support and at ``x <= 0``."""
    p = _params(params)
    x = np.asarray(x, dtype=float)
    inside = (x >= p.lambda_minus) & (x <= p.lambda_plus) & (x > 0)
    xs = np.where(inside, x, 1.0)
    val = np.sqrt(np.clip((p.lambda_plus - xs) * (xs - p.lambda_minus), 0.0, None)) / (2 * np.pi * p.gamma * xs)
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def rho_linear(E, params):
    """Even density in ``E`` supported on ``E**2`` in the MP support.

    Prefactor ``gamma / ((1 + gamma) * pi * |E|)``; at ``gamma = 1`` this is
    the semicircle on ``[-2, 2]`` and ``E = 0`` takes its limit ``1/pi``.
    """
    p = _params(params)
    E = np.asarray(E, dtype=float)
    x = E * E
    inside = (x >= p.lambda_minus) & (x <= p.lambda_plus)
    a = np.where(inside & (E != 0), np.abs(E), 1.0)
    root = np.sqrt(np.clip((p.lambda_plus - x) * (x - p.lambda_minus), 0.0, None))
    val = p.gamma * root / ((1 + p.gamma) * np.pi * a)
    if p.lambda_minus == 0.0:
        val = np.where(E == 0, 2 * p.gamma / ((1 + p.gamma) * np.pi), val)
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def semicircle_transform(z):
    """``(-z + sqrt(z**2 - 4)) / 2`` with the root asymptotic to ``z``."""
    z = np.asarray(z, dtype=complex)
    out = (-z + np.sqrt(z - 2) * np.sqrt(z + 2)) / 2
    return out[()] if out.ndim == 0 else out


# -- transforms ---------------------------------------------------------------

def _roots(z, p: MPParams):
    """Both roots of ``gamma z m^2 + (gamma + z - 1) m + 1``, cancellation-free.

    The first returned root is the analytic continuation of the transform off
    the support (product of principal square roots).
    """
    b = p.gamma + z - 1
    s = np.sqrt(z - p.lambda_minus) * np.sqrt(z - p.lambda_plus)
    plus, minus = -b + s, -b - s
    use_plus = np.abs(plus) >= np.abs(minus)
    big = np.where(use_plus, plus, minus)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_big = big / (2 * p.gamma * z)
        r_small = 2 / big
    analytic = np.where(use_plus, r_big, r_small)
    other = np.where(use_plus, r_small, r_big)
    return analytic, other


def m_inf(z, params):
    """Stieltjes transform of the MP law.

    For ``Im z > 0`` the root with positive imaginary part; for ``Im z < 0``
    the conjugate; for real ``z`` the limit from the upper half-plane.
    """
    p = _params(params)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("m_inf is not defined at z = 0")
    flip = z.imag < 0
    zu = np.where(flip, np.conj(z), z)
    analytic, other = _roots(zu, p)
    upper = zu.imag > 0
    pick = np.where(upper & (other.imag > analytic.imag), other, analytic)
    # on the support from above: the analytic root may sit on the wrong sheet
    real_on_support = (~upper) & (zu.real >= p.lambda_minus) & (zu.real <= p.lambda_plus)
    pick = np.where(real_on_support & (other.imag > analytic.imag), other, pick)
    # a Herglotz root has Im m >= Im z / (|z| + lambda_+)^2; use 1e-14 as an absolute floor
    floor = np.minimum(1e-14, 1e-2 * zu.imag / (np.abs(zu) + p.lambda_plus) ** 2)
    bad = upper & (zu.imag > 1e-8) & (np.maximum(analytic.imag, other.imag) <= floor)
    if np.any(bad):
        raise BranchAmbiguity(f"no root with positive imaginary part at z = {zu[bad].ravel()[0]}")
    out = np.where(flip, np.conj(pick), pick)
    return out[()] if out.ndim == 0 else out


def m_inf_plus(z, params):
    p = _params(params)
    z = np.asarray(z, dtype=complex)
    return p.gamma * m_inf(z, p) + (p.gamma - 1) / z


def m_lin(z, params):
    z = np.asarray(z, dtype=complex)
    return z * m_inf(z * z, params)


def m_lin_plus(z, params):
    p = _params(params)
    z = np.asarray(z, dtype=complex)
    return p.gamma * m_lin(z, p) + (p.gamma - 1) / z


def m_variants(z, params) -> StieltjesValue:
    p = _params(params)
    mi = m_inf(z, p)
    ml = m_lin(z, p)
    return StieltjesValue(
        z=z,
        m_inf=mi,
        m_inf_plus=p.gamma * mi + (p.gamma - 1) / np.asarray(z, dtype=complex),
        m_lin=ml,
        m_lin_plus=p.gamma * ml + (p.gamma - 1) / np.asarray(z, dtype=complex),
    )


# -- quadrature ---------------------------------------------------------------
# x = lambda_- + width * sin(theta)**2 turns rho dx into a smooth integrand.

def _x_of_theta(theta, p: MPParams):
    return p.lambda_minus + p.width * np.sin(theta) ** 2


def _theta_of_x(x, p: MPParams):
    t = np.clip((x - p.lambda_minus) / p.width, 0.0, 1.0)
    return np.arcsin(np.sqrt(t))


def _mass_density(theta, p: MPParams):
    s, c = np.sin(theta), np.cos(theta)
    if p.lambda_minus == 0.0:
        # x = width * s^2 cancels; keeps theta = 0 finite
        return p.width * c * c / (np.pi * p.gamma)
    return p.width ** 2 * s * s * c * c / (np.pi * p.gamma * _x_of_theta(theta, p))


def _quad(f, a, b, tol=QUAD_TOL):
    val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=400)
    if not np.isfinite(val) or err > 1e3 * tol + 1e-9 * abs(val):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} on [{a}, {b}]")
    return val


def mp_cdf(x, params) -> float:
    """``Integral of rho_mp`` up to ``x``."""
    p = _params(params)
    if x <= p.lambda_minus:
        return 0.0
    if x >= p.lambda_plus:
        return 1.0
    return _quad(lambda t: _mass_density(t, p), 0.0, float(_theta_of_x(x, p)))


def stieltjes_quadrature(z, params, tol: float = 1e-11) -> complex:
    """``Integral rho_mp(x) / (x - z) dx`` by adaptive quadrature."""
    p = _params(params)
    z = complex(z)

    def integrand(t):
        return _mass_density(t, p) / (_x_of_theta(t, p) - z)

    re = _quad(lambda t: integrand(t).real, 0.0, np.pi / 2, tol)
    im = _quad(lambda t: integrand(t).imag, 0.0, np.pi / 2, tol)
    return complex(re, im)


def classical_locations(N: int, params) -> np.ndarray:
    """Quantiles ``gamma_i`` with ``CDF(gamma_i) = i/N`` for ``i = 1..N``.

    Each root is bracketed in the angle variable and refined to machine
    precision, so ``CDF(gamma_i) - i/N`` is at quadrature accuracy.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    p = _params(params)
    dens = lambda t: _mass_density(t, p)
    out = np.empty(N)
    lo, base = 0.0, 0.0
    for i in range(1, N):
        target = i / N

        def g(t):
            return base + _quad(dens, lo, t) - target

        hi = np.pi / 2
        t = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        # integrate in increments; re-anchor at the exact new point
        base = base + _quad(dens, lo, t)
        lo = t
        out[i - 1] = _x_of_theta(t, p)
    out[N - 1] = p.lambda_plus
    return out


# -- self-consistent equations ------------------------------------------------

def sce_residual(s, z, params):
    """``gamma z s^2 + (gamma + z - 1) s + 1``."""
    p = _params(params)
    return p.gamma * z * s * s + (p.gamma + z - 1) * s + 1


def sce_residual_small(s, z, params):
    """Averaged equation for ``s_*``: ``1 + (z + gamma - 1 + gamma z s) s``."""
    p = _params(params)
    return 1 + (z + p.gamma - 1 + p.gamma * z * s) * s


def sce_residual_large(s, z, params):
    """Averaged equation for ``s_{*,+}``: ``z s^2 + (z + 1 - gamma) s + 1``."""
    p = _params(params)
    return z * s * s + (z + 1 - p.gamma) * s + 1


def sce_residual_black(s, z, params):
    """Averaged equation for ``s_b``: ``s^2 + (z + (1 - gamma)/z) s + 1``."""
    p = _params(params)
    return s * s + (z + (1 - p.gamma) / z) * s + 1


def sce_residual_white(s, z, params):
    """Averaged equation for ``s_w``: ``gamma s^2 + (z + (gamma - 1)/z) s + 1``."""
    p = _params(params)
    return p.gamma * s * s + (z + (p.gamma - 1) / z) * s + 1


def F(z, r, params):
    """``min((1 + |(lambda_+ - z)(z - lambda_-)|^(-1/2)) r, sqrt(r))``."""
    p = _params(params)
    z = np.asarray(z, dtype=complex)
    r = np.asarray(r, dtype=float)
    mod = np.abs((p.lambda_plus - z) * (z - p.lambda_minus))
    with np.errstate(divide="ignore"):
        lin = (1 + mod ** -0.5) * r
    out = np.minimum(lin, np.sqrt(r))
    return out[()] if out.ndim == 0 else out


def stability_gap(s, z, params, epsilon: float = 0.0):
    """``(|m_inf - s|, F_z(|R| / (1 + |z|)))`` with ``R`` the MP residual."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("stability_gap needs Im z > 0")
    if abs(z.real) <= epsilon:
        raise ValueError(f"|Re z| must exceed epsilon = {epsilon}")
    p = _params(params)
    r = abs(sce_residual(s, z, p)) / (1 + abs(z))
    return abs(complex(m_inf(z, p)) - s), float(F(z, r, p))


# -- boundedness ---------------------------------------------------------------

@dataclass(frozen=True)
class BoundednessScan:
    gamma: float
    epsilon: float
    Lambda: float
    maxima: dict
    n_points: int

    @property
    def maximum(self) -> float:
        return max(self.maxima.values())


def boundedness_grid(params, Lambda: float = 4.0, eta_min: float = 1e-7, eta_max: float = 1e3,
                     n_energy: int = 161, n_eta: int = 61):
    """Points ``E + i eta`` grouped by energy regime.

    Regimes: ``|E|`` in ``[eps, Lambda]``, ``|E| > Lambda`` and (for
    ``gamma < 1``) ``|E| < eps`` with ``eps = sqrt(lambda_-)/100``.
    """
    p = _params(params)
    eps = math.sqrt(p.lambda_minus) / 100
    etas = np.geomspace(eta_min, eta_max, n_eta)
    e_floor = eps if eps > 0 else 1e-3
    # include the edges sqrt(lambda_pm), where |m_lin| peaks
    mid = np.union1d(np.linspace(e_floor, Lambda, n_energy),
                     [math.sqrt(p.lambda_minus), math.sqrt(p.lambda_plus)])
    mid = mid[mid >= e_floor]
    tail = np.geomspace(Lambda * 1.0001, 1e4, 41)
    regimes = {"bulk": np.concatenate([mid, -mid]), "tail": np.concatenate([tail, -tail])}
    if eps > 0:
        small = np.linspace(0.0, eps * 0.999, 21)
        regimes["small"] = np.concatenate([small, -small[1:]])
    return eps, {k: (E[:, None] + 1j * etas[None, :]).ravel() for k, E in regimes.items()}


def boundedness_scan(params, grid: dict | None = None, Lambda: float = 4.0, **grid_kw) -> BoundednessScan:
    """Maximum of ``|m_lin|`` over each regime of ``grid``."""
    p = _params(params)
    eps = math.sqrt(p.lambda_minus) / 100
    if grid is None:
        eps, grid = boundedness_grid(p, Lambda=Lambda, **grid_kw)
    maxima = {}
    n = 0
    for name, pts in grid.items():
        vals = np.abs(m_lin(np.asarray(pts), p))
        if not np.all(np.isfinite(vals)):
            raise BranchAmbiguity(f"non-finite m_lin in regime {name}")
        maxima[name] = float(vals.max())
        n += vals.size
    return BoundednessScan(p.gamma, eps, Lambda, maxima, n)

"""Functional pairs F = a(|xi|) |eta| f(psi) and their angular special functions.

A pair carries the radial weight ``a`` with its derivative and the angular
profile ``f`` with two derivatives.  The dissipation weight
``rho = a |eta| g`` uses ``g = f + f''`` and the second-derivative remainder
uses ``m = f - f' tan(psi)``; both are derived, never stored.

Composite functionals (a signed sum of such products) are lists of terms,
since every downstream quantity is linear in ``(a, f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

#: absolute tolerance of the adaptive quadrature inside f_lambda
QUAD_EPSABS = 1e-12

LOG2 = math.log(2.0)


# -- angular special functions ---------------------------------------------

def cos_power_integral(psi, lam: float):
    """int_0^psi (cos t)^(1/lam) dt, by adaptive Gauss-Kronrod per point."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    p = 1.0 / lam
    psi = np.asarray(psi, dtype=float)
    out = np.empty(psi.shape)
    flat_in, flat_out = psi.ravel(), out.ravel()
    for k, x in enumerate(flat_in):
        if x == 0.0:
            flat_out[k] = 0.0
            continue
        val, _ = quad(lambda t: math.cos(t) ** p, 0.0, abs(x),
                      epsabs=QUAD_EPSABS, epsrel=0.0, limit=200)
        flat_out[k] = math.copysign(val, x)
    return out if psi.ndim else float(out)


def _cos_pow(c, p):
    return np.power(np.maximum(c, 0.0), p)


def f_lambda(psi, lam: float):
    """sin(psi) int_0^psi cos^(1/lam) + lam cos(psi)^(1 + 1/lam)."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    psi = np.asarray(psi, dtype=float)
    c = np.cos(psi)
    return np.sin(psi) * cos_power_integral(psi, lam) + lam * _cos_pow(c, 1.0 + 1.0 / lam)


def _lambda_angular(lam: float):
    p = 1.0 / lam

    def angular(psi):
        psi = np.asarray(psi, dtype=float)
        s, c = np.sin(psi), np.cos(psi)
        integral = cos_power_integral(psi, lam)
        cp = _cos_pow(c, p)
        f = s * integral + lam * cp * c
        df = c * integral - lam * s * cp
        with np.errstate(divide="ignore"):
            g = _cos_pow(c, -(lam - 1.0) / lam) if lam != 1.0 else np.ones_like(c)
        return f, df, g - f

    return angular


def h_eval(psi):
    """psi sin(psi) + cos(psi) log cos(psi), extended by continuity to |psi| = pi/2."""
    psi = np.asarray(psi, dtype=float)
    c = np.cos(psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        clogc = np.where(c > 0, c * np.log(np.where(c > 0, c, 1.0)), 0.0)
    return psi * np.sin(psi) + clogc


def _h_angular(psi):
    psi = np.asarray(psi, dtype=float)
    s, c = np.sin(psi), np.cos(psi)
    logc = np.log(c)
    f = psi * s + c * logc
    df = psi * c - s * logc
    d2f = c - psi * s - c * logc + s * s / c
    return f, df, d2f


def b_eval(r):
    """r/4 - log(r)/r - (1 - log 2)/(2r) for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("b(r) needs r > 0")
    return r / 4.0 - np.log(r) / r - (1.0 - LOG2) / (2.0 * r)


def _b_radial(r):
    r = np.asarray(r, dtype=float)
    a = b_eval(r)
    da = 0.25 - (1.0 - np.log(r)) / r ** 2 + (1.0 - LOG2) / (2.0 * r ** 2)
    return a, da


def _cos_angular(psi):
    s, c = np.sin(psi), np.cos(psi)
    return c, -s, -c


def _sin_angular(psi):
    s, c = np.sin(psi), np.cos(psi)
    return s, c, -s


def _const_angular(value):
    def angular(psi):
        psi = np.asarray(psi, dtype=float)
        return np.full(psi.shape, value), np.zeros(psi.shape), np.zeros(psi.shape)
    return angular


# -- pairs -------------------------------------------------------------------

@dataclass(frozen=True)
class AngularValues:
    f: np.ndarray
    df: np.ndarray
    d2f: np.ndarray
    tan: np.ndarray

    @property
    def g(self):
        return self.f + self.d2f

    @property
    def m(self):
        # f' tan(psi) with f' == 0 taken as 0 even where tan(psi) is infinite
        with np.errstate(invalid="ignore"):
            prod = np.where(self.df == 0.0, 0.0, self.df * self.tan)
        return self.f - prod


@dataclass(frozen=True)
class Term:
    """One product a(r) |eta| f(psi).

    ``radial(r) -> (a, a')`` and ``angular(psi) -> (f, f', f'')``.
    """

    radial: Callable
    angular: Callable
    sign: float = 1.0
    label: str = ""

    def radial_values(self, r):
        return self.radial(np.asarray(r, dtype=float))

    def angular_values(self, psi, sin_psi=None, cos_psi=None) -> AngularValues:
        psi = np.asarray(psi, dtype=float)
        s = np.sin(psi) if sin_psi is None else sin_psi
        c = np.cos(psi) if cos_psi is None else cos_psi
        f, df, d2f = self.angular(psi)
        with np.errstate(divide="ignore"):
            tan = np.where(c > 0, s / np.where(c > 0, c, 1.0), np.copysign(np.inf, s))
        return AngularValues(np.asarray(f, float), np.asarray(df, float),
                             np.asarray(d2f, float), tan)

    def g(self, psi):
        return self.angular_values(psi).g

    def m(self, psi):
        return self.angular_values(psi).m


@dataclass(frozen=True)
class FunctionalPair:
    """Signed sum of :class:`Term` objects defining F and rho.

    ``psi_singular`` marks pairs whose ``g`` or ``f' tan(psi)`` blows up as
    psi -> +-pi/2; evaluators drop nodes near tangencies for those pairs.
    """

    name: str
    terms: tuple
    psi_singular: bool = False
    params: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.terms)


def gaussian_radial(scale: float):
    def radial(r):
        a = np.exp(-r * r / scale)
        return a, -2.0 * r / scale * a
    return radial


def poly_radial(c0: float, c1: float, c2: float):
    def radial(r):
        return c0 + c1 * r + c2 * r * r, c1 + 2.0 * c2 * r
    return radial


def huisken_pair() -> FunctionalPair:
    return FunctionalPair("huisken", (Term(gaussian_radial(4.0), _const_angular(1.0)),))


def lambda_radial(lam: float):
    q = (1.0 - lam) / lam

    def radial(r):
        a = np.exp(-r * r / (4.0 * lam)) * np.power(r, q)
        return a, a * (-r / (2.0 * lam) + q / r)
    return radial


def lambda_pair(lam: float) -> FunctionalPair:
    """a = exp(-r^2/(4 lam)) r^((1-lam)/lam), f = f_lambda, g = cos(psi)^((1-lam)/lam)."""
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    term = Term(lambda_radial(lam), _lambda_angular(lam), label=f"lambda={lam!r}")
    # g is unbounded at psi = +-pi/2 only for lam > 1; for lam <= 1 both g and
    # f' tan(psi) stay bounded
    return FunctionalPair(f"lambda:{lam!r}", (term,), psi_singular=lam > 1.0,
                          params={"lambda": lam})


def log_pair() -> FunctionalPair:
    """F = (|eta|/|xi|) (h(psi) - |xi| b(|xi|) cos(psi)) as two signed terms."""
    first = Term(lambda r: (1.0 / r, -1.0 / (r * r)), _h_angular, 1.0, "h/r")
    second = Term(_b_radial, _cos_angular, -1.0, "b cos")
    return FunctionalPair("log", (first, second), psi_singular=True)


def sphere_pair() -> FunctionalPair:
    """Length of the radial projection onto the unit sphere: a = 1/r, f = cos(psi)."""
    term = Term(lambda r: (1.0 / r, -1.0 / (r * r)), _cos_angular, label="cos/r")
    return FunctionalPair("sphere", (term,), psi_singular=True)


def radial_pair(radial: Callable, name: str = "radial") -> FunctionalPair:
    """f = sin(psi) with an arbitrary radial weight; g and m vanish identically."""
    return FunctionalPair(name, (Term(radial, _sin_angular, label="sin"),))


def parse_radial(spec: str) -> Callable:
    kind, _, args = spec.partition(":")
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"bad radial weight {spec!r}") from None
    if kind == "poly" and len(values) == 3:
        return poly_radial(*values)
    if kind == "gauss" and len(values) == 1 and values[0] > 0:
        return gaussian_radial(values[0])
    raise ValueError(f"bad radial weight {spec!r}; expected poly:c0,c1,c2 or gauss:s")


def pair_from_spec(spec: str) -> FunctionalPair:
    """Parse ``huisken``, ``lambda:<x>``, ``log``, ``sphere`` or ``radial:<weight>``."""
    spec = spec.strip()
    if spec == "huisken":
        return huisken_pair()
    if spec == "log":
        return log_pair()
    if spec == "sphere":
        return sphere_pair()
    if spec.startswith("lambda:"):
        try:
            lam = float(spec[len("lambda:"):])
        except ValueError:
            raise ValueError(f"bad pair spec {spec!r}") from None
        return lambda_pair(lam)
    if spec.startswith("radial:"):
        return radial_pair(parse_radial(spec[len("radial:"):]), name=spec)
    raise ValueError(f"unknown pair {spec!r}")


# -- validation --------------------------------------------------------------

@dataclass
class ValidationReport:
    max_df_residual: float
    max_d2f_residual: float
    max_m_residual: float
    max_da_residual: float
    tolerance: float
    passed: bool


def pair_validate(pair: FunctionalPair, psi_max: float, tol: float = 1e-6,
                  n_psi: int = 201, step: float = 1e-5) -> ValidationReport:
    """Check the supplied derivatives of every term against central differences.

    The radial residual is relative to ``1 + |a'|`` so weights that are steep
    near the small end of ``r in [0.1, 5]`` are judged fairly.
    """
    if not 0 < psi_max < np.pi / 2:
        raise ValueError("psi_max must lie in (0, pi/2)")
    psi = np.linspace(-psi_max, psi_max, n_psi)
    r = np.linspace(0.1, 5.0, 200)
    res_df = res_d2f = res_m = res_da = 0.0
    for term in pair:
        f_p, df_p, _ = term.angular(psi + step)
        f_m, df_m, _ = term.angular(psi - step)
        vals = term.angular_values(psi)
        res_df = max(res_df, np.max(np.abs(vals.df - (f_p - f_m) / (2 * step))))
        res_d2f = max(res_d2f, np.max(np.abs(vals.d2f - (df_p - df_m) / (2 * step))))
        res_m = max(res_m, np.max(np.abs(vals.m + vals.df * vals.tan - vals.f)))
        a_p, _ = term.radial(r + step)
        a_m, _ = term.radial(r - step)
        _, da = term.radial(r)
        res_da = max(res_da, np.max(np.abs(da - (a_p - a_m) / (2 * step)) / (1 + np.abs(da))))
    passed = max(res_df, res_d2f, res_da) <= tol and res_m <= 1e-10
    return ValidationReport(float(res_df), float(res_d2f), float(res_m), float(res_da),
                            tol, bool(passed))

"""Isospectral partners of the Poschl-Teller Hamiltonian.

First order: A^dag = (-d/dx + kappa)/sqrt(2) with kappa = (log u_{eps,1,0})'
and V1 = V0 - kappa'.  Second order: B^dag = (d^2 - eta d + theta)/2 built
from the Wronskian of two regular solutions with energies inside one
spectral gap.

Both seeds share the envelope sin^alpha cos^beta, so every quantity is
written through the 2F1 factors F(z), z = sin^2 x, and their z-derivatives;
this keeps the singular envelope terms out of all differences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularPartnerError
from .pt_model import (
    HALF_PI,
    PTParams,
    _check_x,
    _hyp_pair,
    _out,
    eigenfunction_table,
    eigenvalue,
    potential_v0,
)
from .specfun import hyp2f1, hyp2f1_deriv

GRID_POINTS = 100_000


class PartnerKind(enum.Enum):
    FIRST_ORDER = "first"
    SECOND_ORDER = "second"


@dataclass(frozen=True)
class PartnerSpec:
    kind: PartnerKind
    eps1: float
    eps2: float | None = None
    level_l: int | None = None


def _seed_factor(p: PTParams, eps: float, x, order: int):
    """F, F_z (and F_zz if order == 2) of 2F1(g/2 + s, g/2 - s; alpha + 1/2; sin^2 x)."""
    s, c = np.sin(x), np.cos(x)
    z, zc = s * s, c * c
    a, b = _hyp_pair(p.gamma / 2, eps)
    cc = p.alpha + 0.5
    out = [hyp2f1(a, b, cc, z, zc=zc), hyp2f1_deriv(a, b, cc, z, 1, zc=zc)]
    if order == 2:
        out.append(hyp2f1_deriv(a, b, cc, z, 2, zc=zc))
    return out


def _interior_grid(n=GRID_POINTS):
    return (np.arange(n) + 0.5) * (HALF_PI / n)


def _first_sign_change(values, x):
    signs = np.sign(values)
    bad = np.flatnonzero((signs[:-1] * signs[1:] <= 0) | ~np.isfinite(values[:-1]))
    return None if bad.size == 0 else float(x[bad[0]])


@dataclass(frozen=True)
class PartnerModel:
    """A built partner potential with its eigenfunction evaluator."""

    spec: PartnerSpec
    base: PTParams

    @property
    def kind(self) -> PartnerKind:
        return self.spec.kind

    def potential_v1(self, x):
        raise NotImplementedError

    def eigenfunction(self, n: int, x):
        raise NotImplementedError

    def eigenvalue(self, n: int) -> float:
        return eigenvalue(self.base, n)


class FirstOrderPartner(PartnerModel):
    """V1 = a(a+1)/(2 sin^2) + (b-2)(b-1)/(2 cos^2) - (log v_eps)''."""

    @property
    def eps(self) -> float:
        return self.spec.eps1

    def seed(self, x):
        """v_eps(x) = cos^(2 beta - 1)(x) F(sin^2 x)."""
        xa = _check_x(x)
        f, _ = _seed_factor(self.base, self.eps, xa, 1)
        return _out(np.cos(xa) ** (2 * self.base.beta - 1) * f, x)

    def kappa(self, x):
        xa = _check_x(x)
        p = self.base
        s, c = np.sin(xa), np.cos(xa)
        f, fz = _seed_factor(p, self.eps, xa, 1)
        return _out(p.alpha * c / s - p.beta * s / c + 2 * s * c * fz / f, x)

    def log_seed_dd(self, x):
        """(log v_eps)'' from v, v', v'' through the z-derivatives of F."""
        xa = _check_x(x)
        p = self.base
        s, c = np.sin(xa), np.cos(xa)
        f, fz, fzz = _seed_factor(p, self.eps, xa, 2)
        dz, ddz = 2 * s * c, 2 * np.cos(2 * xa)
        log_f_dd = (fzz * dz * dz + fz * ddz) / f - (fz * dz / f) ** 2
        return _out(-(2 * p.beta - 1) / (c * c) + log_f_dd, x)

    def potential_v1(self, x):
        xa = _check_x(x)
        p = self.base
        s2, c2 = np.sin(xa) ** 2, np.cos(xa) ** 2
        v1 = (
            p.alpha * (p.alpha + 1) / (2 * s2)
            + (p.beta - 2) * (p.beta - 1) / (2 * c2)
            - self.log_seed_dd(xa)
        )
        return _out(v1, x)

    def apply_adag(self, n: int, x):
        """A^dag psi_{0,n} (unnormalised)."""
        xa = _check_x(x)
        psi, dpsi = eigenfunction_table(self.base, n, xa, derivative=True)
        return _out((-dpsi[n] + self.kappa(xa) * psi[n]) / math.sqrt(2.0), x)

    def eigenfunction(self, n: int, x):
        if n > 1000:
            raise ParameterError("partner eigenfunctions are limited to n <= 1000")
        return self.apply_adag(n, x) / math.sqrt(eigenvalue(self.base, n) - self.eps)


class SecondOrderPartner(PartnerModel):
    """V1 = (a+1)(a+2)/(2 sin^2) + (b-3)(b-2)/(2 cos^2) - (log calW)''."""

    def _factors(self, x):
        s, c = np.sin(x), np.cos(x)
        f1, f1z = _seed_factor(self.base, self.spec.eps1, x, 1)
        f2, f2z = _seed_factor(self.base, self.spec.eps2, x, 1)
        # W(u1, u2) = sin^(2a) cos^(2b) sin(2x) D
        d = f1z * f2 - f1 * f2z
        return s, c, f1, f1z, f2, f2z, d

    def wronskian(self, x):
        xa = _check_x(x)
        p = self.base
        s, c, *_, d = self._factors(xa)
        return _out(s ** (2 * p.alpha) * c ** (2 * p.beta) * 2 * s * c * d, x)

    def seed(self, x):
        """calW(x) = W(u1, u2) / (sin^(2 alpha + 1) cos^(3 - 2 beta))."""
        xa = _check_x(x)
        p = self.base
        s, c, *_, d = self._factors(xa)
        return _out(2 * c ** (4 * p.beta - 2) * d, x)

    def eta_theta(self, x):
        """eta = (log W)', eta' and theta for B^dag."""
        xa = _check_x(x)
        p = self.base
        s, c, f1, f1z, f2, f2z, d = self._factors(xa)
        sin2 = 2 * s * c
        de = self.spec.eps2 - self.spec.eps1
        eta = 2 * de * f1 * f2 / (sin2 * d)
        # eta * (kappa1 + kappa2) with the poles of kappa_i cancelled
        eta_ksum = 2 * de / (sin2 * d) * (
            2 * (p.alpha * c / s - p.beta * s / c) * f1 * f2 + sin2 * (f1z * f2 + f1 * f2z)
        )
        eta_d = eta_ksum - eta * eta
        theta = 0.5 * eta_ksum - 2 * potential_v0(p, xa) + self.spec.eps1 + self.spec.eps2
        return eta, eta_d, theta

    def log_seed_dd(self, x):
        xa = _check_x(x)
        p = self.base
        _, eta_d, _ = self.eta_theta(xa)
        s2, c2 = np.sin(xa) ** 2, np.cos(xa) ** 2
        return _out(eta_d + (2 * p.alpha + 1) / s2 + (3 - 2 * p.beta) / c2, x)

    def potential_v1(self, x):
        xa = _check_x(x)
        p = self.base
        s2, c2 = np.sin(xa) ** 2, np.cos(xa) ** 2
        v1 = (
            (p.alpha + 1) * (p.alpha + 2) / (2 * s2)
            + (p.beta - 3) * (p.beta - 2) / (2 * c2)
            - self.log_seed_dd(xa)
        )
        return _out(v1, x)

    def apply_bdag(self, n: int, x):
        """B^dag psi_{0,n} with psi'' = 2 (V0 - E_n) psi substituted."""
        xa = _check_x(x)
        p = self.base
        psi, dpsi = eigenfunction_table(p, n, xa, derivative=True)
        psi, dpsi = psi[n], dpsi[n]
        eta, _, theta = self.eta_theta(xa)
        ddpsi = 2 * (potential_v0(p, xa) - eigenvalue(p, n)) * psi
        return _out(0.5 * (ddpsi - eta * dpsi + theta * psi), x)

    def eigenfunction(self, n: int, x):
        e = eigenvalue(self.base, n)
        return self.apply_bdag(n, x) / math.sqrt((e - self.spec.eps1) * (e - self.spec.eps2))


def build_first_order(p: PTParams, eps: float) -> FirstOrderPartner:
    if not p.first_order_ok:
        raise ParameterError(f"first-order partner needs beta > 2, got {p.beta}")
    if not eps < eigenvalue(p, 0):
        raise ParameterError(f"need eps < E_0 = {eigenvalue(p, 0)}, got {eps}")
    model = FirstOrderPartner(PartnerSpec(PartnerKind.FIRST_ORDER, eps), p)
    x = _interior_grid()
    f, _ = _seed_factor(p, eps, x, 1)
    x_bad = _first_sign_change(f, x)
    if x_bad is not None:
        raise SingularPartnerError(f"v_eps vanishes near x = {x_bad}", x_zero=x_bad)
    return model


def build_second_order(p: PTParams, eps1: float, eps2: float, level_l: int) -> SecondOrderPartner:
    if not p.second_order_ok:
        raise ParameterError(f"second-order partner needs beta > 3, got {p.beta}")
    if level_l < 0:
        raise ParameterError("level_l must be nonnegative")
    lo, hi = eigenvalue(p, level_l), eigenvalue(p, level_l + 1)
    if not lo < eps2 < eps1 < hi:
        raise ParameterError(
            f"need E_l < eps2 < eps1 < E_(l+1) = ({lo}, {hi}), got eps1={eps1}, eps2={eps2}"
        )
    model = SecondOrderPartner(PartnerSpec(PartnerKind.SECOND_ORDER, eps1, eps2, level_l), p)
    x = _interior_grid()
    d = model._factors(x)[-1]
    x_bad = _first_sign_change(d, x)
    if x_bad is not None:
        raise SingularPartnerError(f"Wronskian vanishes near x = {x_bad}", x_zero=x_bad)
    return model


def partner_eigenfunction_1(model: PartnerModel, n: int, x):
    if model.kind is not PartnerKind.FIRST_ORDER:
        raise ParameterError("expected a first-order partner")
    return model.eigenfunction(n, x)


def partner_eigenfunction_2(model: PartnerModel, n: int, x):
    if model.kind is not PartnerKind.SECOND_ORDER:
        raise ParameterError("expected a second-order partner")
    return model.eigenfunction(n, x)

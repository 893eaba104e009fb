"""Differential and integral operators built from multipliers.

Velocity recovery follows the stream-function convention
u = grad_perp(Delta^{-1} omega) = (-d2 psi, d1 psi) with Delta psi = omega,
so the output is divergence-free exactly in its coefficients.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .fields import SpectralField, multiply
from .multipliers import Multiplier, apply_multiplier

Velocity = Tuple[SpectralField, SpectralField]

_D1 = Multiplier.partial(0)
_D2 = Multiplier.partial(1)
_BS1 = Multiplier.inv_lap_perp_grad(0)
_BS2 = Multiplier.inv_lap_perp_grad(1)


class MeanFreeError(ValueError):
    pass


def require_mean_free(field: SpectralField, what: str = "field", tol: float = 1e-12):
    if not field.is_mean_free(tol):
        raise MeanFreeError(f"{what} must be mean-free (zero mode {field.mean():.3e})")


def gradient(f: SpectralField) -> Velocity:
    return apply_multiplier(f, _D1), apply_multiplier(f, _D2)


def divergence(v: Velocity) -> SpectralField:
    return apply_multiplier(v[0], _D1) + apply_multiplier(v[1], _D2)


def curl(v: Velocity) -> SpectralField:
    """Scalar curl d1(v2) - d2(v1)."""
    return apply_multiplier(v[1], _D1) - apply_multiplier(v[0], _D2)


def advect(v: Velocity, f: SpectralField, dealias: bool = True) -> SpectralField:
    """v . grad(f) with alias-free products."""
    fx, fy = gradient(f)
    return multiply(v[0], fx, dealias) + multiply(v[1], fy, dealias)


def biot_savart(omega: SpectralField) -> Velocity:
    """Velocity from scalar vorticity; rejects vorticity with a mean.

    The output is divergence-free coefficientwise and curl(u) returns
    omega up to its Nyquist line, which the odd symbols drop (no
    Hermitian partner exists for it on the lattice).
    """
    require_mean_free(omega, "vorticity")
    return apply_multiplier(omega, _BS1), apply_multiplier(omega, _BS2)


def temperature_vorticity_operator(alpha: float, beta: float) -> Multiplier:
    """Multiplier mapping the temperature to its vorticity contribution,
    i.e. the symbol of R_alpha (I + Lambda^(beta-alpha))."""
    riesz = Multiplier.riesz(alpha)
    tail = Multiplier.compose(riesz, Multiplier.lambda_pow(beta - alpha))
    return _SumMultiplier((riesz, tail))


class _SumMultiplier:
    """Sum of multiplier symbols (not part of the composed-kind algebra)."""

    def __init__(self, parts):
        self.parts = tuple(parts)

    def symbol(self, grid):
        out = np.zeros((grid.n, grid.n), dtype=np.complex128)
        for p in self.parts:
            out += p.symbol(grid)
        return out


def apply_symbol_sum(field: SpectralField, op: "_SumMultiplier") -> SpectralField:
    return SpectralField(field.grid, field.coef * op.symbol(field.grid), real=field.real)


def check_alpha(alpha: float):
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (1/2, 1), got {alpha}")


def velocity_decomposition(f: SpectralField, theta: SpectralField, alpha: float,
                           beta: float | None = None) -> Tuple[Velocity, Velocity]:
    """Split the velocity into the part carried by the hybrid variable f
    and the part carried by the temperature.

    u_f = grad_perp Delta^{-1} f
    u_theta = grad_perp Delta^{-1} R_alpha (I + Lambda^(beta-alpha)) theta
    """
    check_alpha(alpha)
    if beta is None:
        beta = 1.0 - alpha
    if abs((alpha + beta) - 1.0) > 1e-14:
        raise ValueError("velocity decomposition requires alpha + beta = 1")
    require_mean_free(f, "hybrid variable")
    require_mean_free(theta, "temperature")
    u_f = biot_savart(f)
    theta_contrib = apply_symbol_sum(theta, temperature_vorticity_operator(alpha, beta))
    u_theta = (apply_multiplier(theta_contrib, _BS1), apply_multiplier(theta_contrib, _BS2))
    return u_f, u_theta


def commutator_apply(op, v: Velocity, phi: SpectralField, dealias: bool = True) -> SpectralField:
    """[op, v.grad] phi = op(v.grad phi) - v.grad(op phi), products dealiased."""
    applied = apply_symbol_sum(phi, op) if isinstance(op, _SumMultiplier) else apply_multiplier(phi, op)
    first = apply_symbol_sum(advect(v, phi, dealias), op) if isinstance(op, _SumMultiplier) \
        else apply_multiplier(advect(v, phi, dealias), op)
    return first - advect(v, applied, dealias)


def leray_project(v: Velocity) -> Velocity:
    """Remove the gradient part: P = I - grad Delta^{-1} div."""
    div = divergence(v)
    grid = v[0].grid
    with np.errstate(divide="ignore"):
        inv = np.where(grid.kmag > 0, 1.0 / np.where(grid.kmag > 0, grid.ksq, 1.0), 0.0)
    phi_coef = -div.coef * inv  # Delta phi = div v
    phi = SpectralField(grid, phi_coef, real=div.real)
    gx, gy = gradient(phi)
    return v[0] - gx, v[1] - gy

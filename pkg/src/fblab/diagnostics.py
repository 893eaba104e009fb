"""Energy ledgers and regularity-criterion monitors.

For a state of the scaled hybrid system, :func:`energy_terms` evaluates,
by exact quadrature, every term appearing when the equations are paired
against Lambda^(2s) F, Lambda^(2 kappa) Theta and F|F|^(p-2):

    I1 = eps^alpha       |< Lambda^s (U.grad F), Lambda^s F >|
    I2 = eps^(2-3 alpha) |< Lambda^(2(beta-alpha)+s) d1 Theta, Lambda^s F >|
    I3 = eps             |< Lambda^s [R_alpha, U.grad] Theta, Lambda^s F >|
    I4 = eps^(2 beta)    |< Lambda^s [Lambda^(beta-2alpha) d1, U.grad] Theta, Lambda^s F >|
    I5 = eps^alpha       |< Lambda^kappa (U.grad Theta), Lambda^kappa Theta >|
    K1..K3 = the same theta-driven terms paired with F|F|^(p-2)

together with the coercive quantities on the left (the Lambda^(s+alpha/2)
and Lambda^(kappa+beta/2) energies, and the signed integral
int F|F|^(p-2) Lambda^alpha F, which is nonnegative).  Rates of the
tracked functionals are centered finite differences of stored values, so
the ledger never re-enters the integrator.

Every velocity-dependent term is also split through u = u_F + u_Theta;
the commutator is linear in the velocity, so the signed splits add back
to the full term exactly.

Ledger evaluation is independent per time slice (rates come from stored
functional values), so slices parallelize trivially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .fields import SpectralField, nice_fft_size
from .model import (SimState, Trajectory, convert_state, scaled_velocity_split,
                    velocity_decomposition_for_state)
from .multipliers import Multiplier, apply_multiplier
from .norms import inner, integral_product, l2_norm_sq, lp_norm
from .operators import advect, commutator_apply, gradient
from .dyadic import besov_norm

DEFAULT_RHO = 0.01


# -- exponent arithmetic ----------------------------------------------------


@dataclass(frozen=True)
class ExponentSuite:
    """All derived exponents used by the ledger configurations."""

    alpha: float
    rho: float = DEFAULT_RHO

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha

    @property
    def gamma(self) -> float:
        """beta/2 - 2 rho, the low-level temperature regularity."""
        return self.beta / 2.0 - 2.0 * self.rho

    @property
    def interpolation_a(self) -> float:
        """(3 - 4 alpha) / (2 beta)."""
        return (3.0 - 4.0 * self.alpha) / (2.0 * self.beta)

    @property
    def q0(self) -> float:
        """4(2 alpha - 1) / (3 alpha beta + 6 alpha - 4)."""
        a, b = self.alpha, self.beta
        return 4.0 * (2.0 * a - 1.0) / (3.0 * a * b + 6.0 * a - 4.0)

    @property
    def delta(self) -> float:
        """(3 - 4 alpha) / (alpha / 2); lies in (0, 1) only for alpha in (2/3, 3/4)."""
        return (3.0 - 4.0 * self.alpha) / (self.alpha / 2.0)

    @property
    def besov_smoothness(self) -> float:
        return 3.0 * self.alpha - 2.0

    @property
    def besov_integrability(self) -> float:
        return 6.0 / (3.0 * self.alpha - 2.0)

    def validity(self) -> Dict[str, bool]:
        """Range checks tied to alpha > 2/3 (delta's claim belongs to the
        sub-case 3 - 4 alpha > 0, i.e. alpha < 3/4; above that the case
        switches and the sign flips)."""
        a = self.alpha
        out = {
            "alpha_above_two_thirds": a > 2.0 / 3.0,
            "q0_at_least_one": self.q0 >= 1.0,
            "criterion_exponent_in_range": 2.0 / a < 6.0 < 2.0 / (1.0 - a),
        }
        if a < 0.75:
            out["delta_in_unit_interval"] = 0.0 < self.delta < 1.0
        else:
            out["case_switch_nonpositive"] = 3.0 - 4.0 * a <= 0.0
        return out


# -- ledger configurations ----------------------------------------------------


@dataclass(frozen=True)
class LedgerConfig:
    config_id: str
    s: float
    kappa: float
    p: int


def ledger_configs(alpha: float, rho: float = DEFAULT_RHO) -> Dict[str, LedgerConfig]:
    """The three bootstrap configurations, plus swapped (s, kappa)
    variants: either assignment of the two derivative weights yields a
    valid ledger identity, so both are exposed."""
    ex = ExponentSuite(alpha, rho)
    b = ex.beta
    cfgs = [
        LedgerConfig("l2", ex.gamma, 0.0, 2),
        LedgerConfig("l2_swap", 0.0, ex.gamma, 2),
        LedgerConfig("l4", 1.5 * b, alpha / 2.0, 4),
        LedgerConfig("l4_swap", alpha / 2.0, 1.5 * b, 4),
        LedgerConfig("l6", (1.0 + b) / 2.0, 2.5 * b, 6),
    ]
    return {c.config_id: c for c in cfgs}


ACCEPTANCE_CONFIG_IDS = ("l2", "l4", "l6")


# -- term evaluation -----------------------------------------------------------


def _lam(field: SpectralField, s: float) -> SpectralField:
    if s == 0.0:
        return field
    return apply_multiplier(field, Multiplier.lambda_pow(s))


def _signed_pair_L2(term: SpectralField, target: SpectralField, s: float) -> float:
    return inner(_lam(term, s), _lam(target, s))


def _signed_pair_power(term: SpectralField, f: SpectralField, p: int) -> float:
    return integral_product(term, f, p - 1)


@dataclass
class EnergyLedgerRow:
    """One evaluated time slice of one ledger configuration."""

    t: float
    config_id: str
    functionals: Dict[str, float]
    dissipation: Dict[str, float]
    terms: Dict[str, float]          # absolute values, I1..I5, K1..K3
    signed: Dict[str, float]         # signed pairings, including the splits
    lhs_rate: Dict[str, float] = dc_field(default_factory=dict)
    verdicts: Dict[str, bool] = dc_field(default_factory=dict)
    tolerance: Dict[str, float] = dc_field(default_factory=dict)
    coercivity_ratio: float = float("nan")


def energy_terms(state: SimState, s: float, kappa: float, p: int) -> EnergyLedgerRow:
    """Evaluate every ledger term for one state by direct quadrature."""
    if p % 2 or p < 2:
        raise ValueError("the L^p pairing keeps the integrand polynomial; p must be even")
    if s < 0 or kappa < 0:
        raise ValueError("derivative weights must be nonnegative")
    params = state.params
    params.require_unit_dissipation("the energy ledger")
    if state.tag not in ("f", "scaled"):
        raise ValueError("the ledger runs on hybrid-formulation states")
    a, b, e = params.alpha, params.beta, params.eps0
    F, Th = state.primary, state.theta

    uf, ut = scaled_velocity_split(F, Th, params)
    u_full = (uf[0] + ut[0], uf[1] + ut[1])
    velocities = {"": u_full, "_f": uf, "_t": ut}

    riesz_op = Multiplier.riesz(a)
    smooth_op = Multiplier.compose(Multiplier.lambda_pow(b - 2 * a), Multiplier.partial(0))
    linear_term = apply_multiplier(Th, Multiplier.compose(
        Multiplier.lambda_pow(2 * (b - a)), Multiplier.partial(0)))

    signed: Dict[str, float] = {}
    for suffix, u in velocities.items():
        signed[f"I1{suffix}"] = (e ** a) * _signed_pair_L2(advect(u, F), F, s)
        signed[f"I3{suffix}"] = e * _signed_pair_L2(commutator_apply(riesz_op, u, Th), F, s)
        signed[f"I4{suffix}"] = (e ** (2 * b)) * _signed_pair_L2(commutator_apply(smooth_op, u, Th), F, s)
        signed[f"I5{suffix}"] = (e ** a) * _signed_pair_L2(advect(u, Th), Th, kappa)
        signed[f"K2{suffix}"] = e * _signed_pair_power(commutator_apply(riesz_op, u, Th), F, p)
        signed[f"K3{suffix}"] = (e ** (2 * b)) * _signed_pair_power(commutator_apply(smooth_op, u, Th), F, p)
    signed["I2"] = (e ** (2 - 3 * a)) * _signed_pair_L2(linear_term, F, s)
    signed["K1"] = (e ** (2 - 3 * a)) * _signed_pair_power(linear_term, F, p)

    terms = {name: abs(signed[name]) for name in
             ("I1", "I2", "I3", "I4", "I5", "K1", "K2", "K3")}

    lam_a = apply_multiplier(F, Multiplier.lambda_pow(a))
    diss_p_signed = (e ** (a - b)) * integral_product(lam_a, F, p - 1)
    dissipation = {
        "s": (e ** (a - b)) * l2_norm_sq(_lam(F, s + a / 2.0)),
        "kappa": l2_norm_sq(_lam(Th, kappa + b / 2.0)),
        "p": diss_p_signed,
    }
    functionals = {
        "s": 0.5 * l2_norm_sq(_lam(F, s)),
        "kappa": 0.5 * l2_norm_sq(_lam(Th, kappa)),
        "p": lp_norm(F, p, pad=nice_fft_size(p * state.grid.n // 2 + 2)) ** p / p,
    }
    lower = (e ** (2 * a - 1)) * lp_norm(F, 2 * p / (2.0 - a)) ** p
    ratio = diss_p_signed / lower if lower > 0 else float("nan")

    return EnergyLedgerRow(t=state.time, config_id="", functionals=functionals,
                           dissipation=dissipation, terms=terms, signed=signed,
                           coercivity_ratio=ratio)


# -- ledger over a trajectory ----------------------------------------------------


_ROW_TERMS = {"s": ("I1", "I2", "I3", "I4"), "kappa": ("I5",), "p": ("K1", "K2", "K3")}


@dataclass
class LedgerVerdict:
    config_id: str
    rows_checked: int
    rows_passed: int
    sup_functionals: Dict[str, float]
    dissipation_integrals: Dict[str, float]
    richardson_rel: Dict[str, float]
    gronwall_rate: float

    @property
    def all_pass(self) -> bool:
        return self.rows_checked == self.rows_passed


def ledger_run(states: Sequence[SimState], config: LedgerConfig,
               rate_tol_scale: float = 5.0, quad_tol: float = 1e-9,
               min_cadence_warning: float = 0.25) -> Tuple[List[EnergyLedgerRow], LedgerVerdict]:
    """Evaluate the ledger along stored states and check, row by row,
    that the finite-difference rate of each tracked functional plus its
    coercive term stays below the sum of the measured right-hand terms,
    up to a scale-aware tolerance 5*max(dt^2, quad_tol)*scale.
    """
    if len(states) < 3:
        raise ValueError("need at least three stored states for centered rates")
    times = np.array([s.time for s in states])
    dts = np.diff(times)
    if np.max(dts) > min_cadence_warning:
        import warnings
        warnings.warn("output cadence is coarse; finite-difference rates may be inaccurate")

    rows = [energy_terms(s, config.s, config.kappa, config.p) for s in states]
    for row in rows:
        row.config_id = config.config_id

    sup_fun = {k: 0.0 for k in ("s", "kappa", "p")}
    integrals = {k: 0.0 for k in ("s", "kappa", "p")}
    integrals_coarse = {k: 0.0 for k in ("s", "kappa", "p")}
    for kind in sup_fun:
        vals = np.array([r.functionals[kind] for r in rows])
        diss = np.array([r.dissipation[kind] for r in rows])
        sup_fun[kind] = float(np.max(vals))
        integrals[kind] = float(np.trapezoid(diss, times))
        integrals_coarse[kind] = float(np.trapezoid(diss[::2], times[::2]))

    checked = passed = 0
    max_rate_ratio = 0.0
    for i in range(1, len(rows) - 1):
        dt_local = times[i + 1] - times[i - 1]
        row = rows[i]
        for kind, term_names in _ROW_TERMS.items():
            rate = (rows[i + 1].functionals[kind] - rows[i - 1].functionals[kind]) / dt_local
            rhs = sum(row.terms[name] for name in term_names)
            diss = row.dissipation[kind]
            scale = max(abs(rate), abs(diss), rhs, 1e-30)
            tol = rate_tol_scale * max((0.5 * dt_local) ** 2, quad_tol) * scale
            ok = rate + diss <= rhs + tol
            row.lhs_rate[kind] = rate
            row.verdicts[kind] = bool(ok)
            row.tolerance[kind] = tol
            checked += 1
            passed += int(ok)
        j_val = row.functionals["s"] + row.functionals["kappa"]
        if j_val > 0:
            max_rate_ratio = max(max_rate_ratio,
                                 (row.terms["I1"] + row.terms["I2"] + row.terms["I3"]
                                  + row.terms["I4"] + row.terms["I5"]) / j_val)

    richardson = {k: abs(integrals[k] - integrals_coarse[k]) / max(integrals[k], 1e-30)
                  for k in integrals}
    verdict = LedgerVerdict(config.config_id, checked, passed, sup_fun, integrals,
                            richardson, max_rate_ratio)
    return rows, verdict


# -- regularity-criterion monitor ---------------------------------------------


@dataclass
class CriteriaReport:
    sup_f_l6: float
    sup_uf_linf: float
    sup_grad_uf_linf: float
    sup_grad_theta_linf: float
    sup_besov: float
    embedding_ratio: float
    alpha: float

    def is_finite(self) -> bool:
        return all(map(math.isfinite, (self.sup_f_l6, self.sup_uf_linf, self.sup_grad_uf_linf,
                                       self.sup_grad_theta_linf, self.sup_besov)))


def _grad_linf(field: SpectralField) -> float:
    gx, gy = gradient(field)
    return max(lp_norm(gx, np.inf), lp_norm(gy, np.inf))


def criteria_monitor(traj: Trajectory) -> CriteriaReport:
    """Running suprema of the blow-up-controlling quantities along a run."""
    alpha = traj.states[0].params.alpha
    ex = ExponentSuite(alpha)
    sup_f6 = sup_uf = sup_guf = sup_gth = sup_bes = 0.0
    ratio = 0.0
    for st in traj.states:
        fs = convert_state(st, "f")
        uf, _ = velocity_decomposition_for_state(fs)
        f6 = lp_norm(fs.primary, 6.0)
        uf_inf = max(lp_norm(uf[0], np.inf), lp_norm(uf[1], np.inf))
        guf_inf = max(_grad_linf(uf[0]), _grad_linf(uf[1]))
        gth_inf = _grad_linf(st.theta)
        bes = besov_norm(fs.primary, ex.besov_smoothness, ex.besov_integrability)
        sup_f6, sup_uf, sup_guf = max(sup_f6, f6), max(sup_uf, uf_inf), max(sup_guf, guf_inf)
        sup_gth, sup_bes = max(sup_gth, gth_inf), max(sup_bes, bes)
        if bes > 0:
            ratio = max(ratio, guf_inf / bes)
    return CriteriaReport(sup_f6, sup_uf, sup_guf, sup_gth, sup_bes, ratio, alpha)

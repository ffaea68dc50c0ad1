"""Orthogonality testing and decomposition harnesses.

A path A is treated as orthogonal to a continuous test martingale N when the
covariation estimate of (A, N) decays below tolerance along the window
schedule.  That is a statistical decision on one realization, never a proof,
so every report carries the raw estimator norms and gaps.

The chain-rule harnesses assemble the martingale part of F(t, X_t) from a
labeled decomposition of X plus its compensator model, define the residual
part by subtraction, and submit the residual to an orthogonality battery of
independent Brownian test paths.  Predictability of labeled components is
established by construction in the simulators, not inferred from data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jumps as jmod
from .ito import (FunctionBundle, increment_field, linear_jump_field,
                  path_of_function, path_of_function_derivative, _qv_cont,
                  stieltjes_left, taylor_remainder_field, time_integral)
from .jumps import CompensatorSpec, X_FIELD, integrability_report
from .paths import LINEAR, CadlagPath, PathError, from_arrays
from .regularize import (DEFAULT_SCHEDULE, DEFAULT_TOL, EpsilonSchedule,
                         covariation, forward_integral, qv_limit)

ORTH_TOL = 0.05
BATTERY_SIZE = 3


@dataclass(frozen=True)
class LabeledDecomposition:
    """Component paths of a decomposition, each on the target path's grid.

    Roles: continuous martingale part M_c, purely discontinuous martingale
    part M_d, residual A (predictable by construction when the simulator
    says so), bounded variation part V and continuous orthogonal part
    A_prime for the V + A_prime refinement of A.
    """

    M_c: CadlagPath | None = None
    M_d: CadlagPath | None = None
    A: CadlagPath | None = None
    V: CadlagPath | None = None
    A_prime: CadlagPath | None = None
    a_predictable: bool = True

    @classmethod
    def from_ground_truth(cls, gt) -> "LabeledDecomposition":
        d = gt.decomposition or {}
        return cls(M_c=d.get("M_c"), M_d=d.get("M_d"), A=d.get("A"),
                   V=d.get("V"), A_prime=d.get("A_prime"))

    @property
    def martingale(self) -> CadlagPath:
        if self.M_c is None and self.M_d is None:
            raise PathError("decomposition has no martingale component")
        if self.M_c is None:
            return self.M_d
        if self.M_d is None:
            return self.M_c
        return self.M_c + self.M_d

    def components(self) -> dict:
        roles = {"M_c": self.M_c, "M_d": self.M_d, "A": self.A,
                 "V": self.V, "A_prime": self.A_prime}
        return {k: v for k, v in roles.items() if v is not None}

    def check_sums_to(self, X: CadlagPath, atol: float = 1e-9) -> float:
        keys = set(self.components())
        use = ["M_c", "M_d"] + (["A"] if "A" in keys else ["V", "A_prime"])
        total = None
        for k in use:
            p = self.components().get(k)
            if p is None:
                continue
            total = p if total is None else total + p
        gap = float(np.max(np.abs(total.values - X.values)))
        if gap > atol * max(X.sup_norm(), 1.0):
            raise PathError(f"components do not sum to the path (gap {gap})")
        return gap


def _zero_like(X: CadlagPath) -> CadlagPath:
    z = np.zeros(X.grid.size)
    return from_arrays(X.grid, z, z.copy(), rule=LINEAR)


def brownian_battery(X: CadlagPath, count: int = BATTERY_SIZE,
                     seed: int = 0) -> list[CadlagPath]:
    """Independent standard Brownian test paths on X's grid, fresh streams."""
    from .simulate import brownian_on_grid
    return [brownian_on_grid(X.grid, 1.0, seed, stream=101 + k)
            for k in range(count)]


# -- orthogonality ------------------------------------------------------------


@dataclass
class OrthReport:
    """Decay diagnostics of the covariation estimate against one test path."""

    epsilons: tuple
    sup_norms: np.ndarray
    sup_gaps: np.ndarray
    tol: float
    decision: bool

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "orthogonality_report",
            "epsilons": list(self.epsilons),
            "sup_norms": self.sup_norms.tolist(),
            "sup_gaps": self.sup_gaps.tolist(),
            "tol": self.tol,
            "decision": self.decision,
        }


def orthogonality_test(A: CadlagPath, N: CadlagPath,
                       schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                       tol: float = ORTH_TOL) -> OrthReport:
    """Covariation of (A, N) along the schedule; decision true when the
    final estimate's sup-norm is below tol.  N must be continuous."""
    if N.jump_marks.size:
        raise PathError("test martingale must be continuous (no marked jumps)")
    estimates = [covariation(A, N, e) for e in schedule]
    sup_norms = np.array([p.sup_norm() for p in estimates])
    gaps = np.array([float(np.max(np.abs(b.values - a.values)))
                     for a, b in zip(estimates, estimates[1:])])
    return OrthReport(tuple(schedule.epsilons), sup_norms, gaps, float(tol),
                      bool(sup_norms[-1] < tol))


def orthogonality_battery(A: CadlagPath, tests: list[CadlagPath],
                          schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                          tol: float = ORTH_TOL) -> list[OrthReport]:
    return [orthogonality_test(A, N, schedule, tol) for N in tests]


# -- chain rule ----------------------------------------------------------------


@dataclass
class ChainRuleReport:
    """Decomposition F(t, X_t) = M^F + A^F with the defect path Gamma.

    ``gamma`` is F(t, X_t) minus the four explicit terms (initial value,
    martingale integral, two compensated small-jump integrals, big-jump
    sum); ``a_path`` regroups it with the big-jump compensator integral so
    that a_path is predictable for predictable inputs.  ``terms`` keeps each
    signed piece for linearity checks.
    """

    function: str
    lhs: CadlagPath
    m_path: CadlagPath
    a_path: CadlagPath
    gamma: CadlagPath
    vbar: CadlagPath
    terms: dict
    orth_reports: list
    decision: bool

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "chain_rule_report",
            "function": self.function,
            "decision": self.decision,
            "orth": [r.to_json_dict() for r in self.orth_reports],
            "terms": sorted(self.terms),
            "gamma_sup": self.gamma.sup_norm(),
            "a_sup": self.a_path.sup_norm(),
        }


def chain_rule_c01(F: FunctionBundle, X: CadlagPath,
                   decomp: LabeledDecomposition,
                   nu: CompensatorSpec | None = None,
                   schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                   tol: float = DEFAULT_TOL, orth_tol: float = ORTH_TOL,
                   test_martingales: list[CadlagPath] | None = None,
                   battery_seed: int = 0, validate: bool = True) -> ChainRuleReport:
    """Assemble the decomposition of F(t, X_t) for F with one continuous
    space derivative and X carrying labeled martingale components.

    The martingale part collects the left-limit integral against
    M_c + M_d, the compensated small-jump increment and linear fields, and
    the big-jump sum; gamma is the remaining defect, and the residual part
    A^F = gamma + (big-jump compensator integral) is submitted to an
    orthogonality battery of independent Brownian test paths.
    """
    if not F.at_least("c01"):
        raise ValueError(f"{F.name} is not of class c01")
    if validate:
        lo = float(min(np.min(X.values), np.min(X.left_values)))
        hi = float(max(np.max(X.values), np.max(X.left_values)))
        pad = 0.1 * max(hi - lo, 1.0)
        F.validate_derivatives((0.0, X.horizon), (lo - pad, hi + pad))
    rep = qv_limit(X, schedule=schedule, tol=tol)
    if not rep.converged:
        from .ito import NonConvergenceError
        raise NonConvergenceError(
            "path bracket did not converge along the schedule")
    if X.jump_marks.size and nu is None:
        raise ValueError("a compensator model is required for a path with jumps")
    lhs = path_of_function(F, X)
    f0 = float(lhs.values[0])
    M = decomp.martingale
    integrand = path_of_function_derivative(F, X)
    mart_int = stieltjes_left(integrand, M)
    if X.jump_marks.size:
        diag = integrability_report(X, F)
        if not diag.taylor_remainder_summable:
            raise jmod.IntegrabilityError(
                "big-jump Taylor total is not finite for this function")
        k_mu, k_nu = jmod.compensated_parts(increment_field(F, "small"), X, nu)
        y_mu, y_nu = jmod.compensated_parts(linear_jump_field(F, "small"), X, nu)
        big_mu = jmod.integrate_mu(taylor_remainder_field(F, "big"), X)
        vbar = jmod.integrate_nu(taylor_remainder_field(F, "big"), nu, X)
        k_comp, y_comp = k_mu - k_nu, y_mu - y_nu
    else:
        k_comp = y_comp = big_mu = vbar = _zero_like(X)
    gamma_vals = (lhs.values - f0 - mart_int.values - k_comp.values
                  + y_comp.values - big_mu.values)
    gamma_left = (lhs.left_values - f0 - mart_int.left_values
                  - k_comp.left_values + y_comp.left_values - big_mu.left_values)
    gamma = from_arrays(X.grid, gamma_vals, gamma_left, rule=LINEAR)
    a_path = gamma + vbar
    m_path = lhs - a_path
    tests = test_martingales or brownian_battery(X, seed=battery_seed)
    orth = orthogonality_battery(a_path, tests, schedule, orth_tol)
    terms = {"martingale_integral": mart_int,
             "small_jump_compensated_increment": k_comp,
             "small_jump_compensated_linear": y_comp,
             "big_jump_sum": big_mu,
             "big_jump_compensator": vbar}
    return ChainRuleReport(F.name, lhs, m_path, a_path, gamma, vbar, terms,
                           orth, all(r.decision for r in orth))


def gamma_c12_reference(F: FunctionBundle, X: CadlagPath,
                        decomp: LabeledDecomposition,
                        nu: CompensatorSpec | None = None,
                        schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                        tol: float = DEFAULT_TOL) -> CadlagPath:
    """Direct evaluation of the smooth-case defect path: time integral,
    forward integral against the labeled residual component, half the second
    derivative against the continuous bracket part, and the small-jump
    compensator integral of the Taylor remainder."""
    if not F.at_least("c12"):
        raise ValueError(f"{F.name} is not of class c12")
    grid = X.grid
    qvc, _ = _qv_cont(X, schedule, tol)
    time_term = time_integral(np.asarray(F.dt(grid, X.values), dtype=float), grid)
    A = decomp.A if decomp.A is not None else _zero_like(X)
    if float(np.max(np.abs(A.values - A.values[0]))) == 0.0:
        fwd = _zero_like(X)
    else:
        integrand = path_of_function_derivative(F, X)
        fwd = forward_integral(integrand, A, schedule.epsilons[-1])
    pre = np.concatenate(([X.values[0]], X.left_values[1:]))
    d2 = np.asarray(F.dxx(grid, pre), dtype=float)
    bracket = 0.5 * stieltjes_left(from_arrays(grid, d2, d2.copy(), rule=LINEAR), qvc)
    if X.jump_marks.size:
        if nu is None:
            raise ValueError("a compensator model is required for a path with jumps")
        small_nu = jmod.integrate_nu(taylor_remainder_field(F, "small"), nu, X)
    else:
        small_nu = _zero_like(X)
    return time_term + fwd + bracket + small_nu


# -- particular decomposition checks ------------------------------------------


@dataclass
class ParticularWDReport:
    """Bracket identity and regrouping checks for X = M + V + A_prime."""

    bracket_gap: float
    bracket_tol: float
    reassembly_gap: float
    alpha_jump_max: float
    alpha_drift_variation: float
    passed_bracket: bool
    passed_reassembly: bool
    passed_alpha_atoms: bool

    @property
    def passed(self) -> bool:
        return (self.passed_bracket and self.passed_reassembly
                and self.passed_alpha_atoms)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "particular_decomposition_report",
            "bracket_gap": self.bracket_gap,
            "bracket_tol": self.bracket_tol,
            "reassembly_gap": self.reassembly_gap,
            "alpha_jump_max": self.alpha_jump_max,
            "alpha_drift_variation": self.alpha_drift_variation,
            "passed": self.passed,
        }


def particular_wd_check(decomp: LabeledDecomposition,
                        nu: CompensatorSpec | None = None,
                        schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                        tol: float = ORTH_TOL,
                        m_bracket: CadlagPath | None = None) -> ParticularWDReport:
    """Checks for the martingale + bounded variation + continuous orthogonal
    splitting: (a) the estimated bracket of the sum matches
    [M, M] + sum (dV)^2 + 2 sum dV dM, (b) the sum is reproduced by the
    regrouping continuous martingale + drift + compensated small jumps +
    big-jump sum, and (c) the drift part alpha carries no jump atoms when
    the compensator has no time atoms."""
    base = next(p for p in (decomp.M_c, decomp.M_d, decomp.V, decomp.A_prime)
                if p is not None)
    M = (decomp.martingale
         if (decomp.M_c is not None or decomp.M_d is not None)
         else _zero_like(base))
    V = decomp.V if decomp.V is not None else _zero_like(M)
    A_prime = decomp.A_prime if decomp.A_prime is not None else _zero_like(M)
    if not np.all(np.isfinite(np.abs(np.diff(V.values)))):
        raise PathError("bounded variation component has non-finite increments")
    total_var = float(np.sum(np.abs(np.diff(V.values))))
    if not np.isfinite(total_var):
        raise PathError("variation accounting failed for V")
    X = M + V + A_prime
    rep = qv_limit(X, schedule=schedule, tol=tol)
    if m_bracket is None:
        m_rep = qv_limit(M, schedule=schedule, tol=tol)
        m_bracket = m_rep.limit
    dv = np.zeros(X.grid.size)
    dm = np.zeros(X.grid.size)
    dv[V.jump_marks] = V.jump_sizes
    dm_sizes = M.values - M.left_values
    cross = np.cumsum(dv * dv + 2.0 * dv * dm_sizes)
    reference = m_bracket.values + cross
    bracket_gap = float(np.max(np.abs(rep.limit.values - reference)))
    scale = max(float(np.max(np.abs(reference))), 1.0)
    passed_bracket = bracket_gap < tol * scale

    if X.jump_marks.size:
        if nu is None:
            raise ValueError("a compensator model is required for a path with jumps")
        small = jmod.compensated_integral(X_FIELD.with_truncation("small"), X, nu)
        big = jmod.integrate_mu(X_FIELD.with_truncation("big"), X)
    else:
        small = big = _zero_like(X)
    mc = decomp.M_c if decomp.M_c is not None else _zero_like(X)
    alpha = X - mc - small - big
    rhs = mc + alpha + small + big
    reassembly_gap = float(np.max(np.abs(rhs.values - X.values)))
    alpha_jump_max = float(np.max(np.abs(alpha.values - alpha.left_values)))
    drift = alpha - A_prime
    alpha_drift_variation = float(np.sum(np.abs(np.diff(drift.values))))
    # with time atoms in the compensator the drift may legitimately jump
    atoms_ok = (alpha_jump_max < 1e-9 * scale) or bool(nu and nu.atoms)
    return ParticularWDReport(
        bracket_gap=bracket_gap, bracket_tol=tol * scale,
        reassembly_gap=reassembly_gap, alpha_jump_max=alpha_jump_max,
        alpha_drift_variation=alpha_drift_variation,
        passed_bracket=passed_bracket,
        passed_reassembly=reassembly_gap < 1e-9 * scale,
        passed_alpha_atoms=atoms_ok)


@dataclass
class MdRepresentationReport:
    """Gap between the labeled purely discontinuous martingale part and the
    compensated size integral rebuilt from the jump measure."""

    sup_gap: float
    atom_gap_max: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.sup_gap < self.tol

    def to_json_dict(self) -> dict:
        return {"schema_version": 1, "kind": "md_representation_report",
                "sup_gap": self.sup_gap, "atom_gap_max": self.atom_gap_max,
                "tol": self.tol, "passed": self.passed}


def md_representation_check(decomp: LabeledDecomposition, X: CadlagPath,
                            nu: CompensatorSpec | None,
                            tol: float = 1e-8) -> MdRepresentationReport:
    """Compare the labeled M_d against the compensated integral of the size
    field and check the atom-level jump identity dM_d = dX - (atom part)."""
    diag = integrability_report(X)
    if not diag.big_jumps_summable:
        raise jmod.IntegrabilityError("big-jump total is not finite")
    md = decomp.M_d if decomp.M_d is not None else _zero_like(X)
    if X.jump_marks.size:
        if nu is None:
            raise ValueError("a compensator model is required for a path with jumps")
        rebuilt = jmod.compensated_integral(X_FIELD, X, nu)
    else:
        rebuilt = _zero_like(X)
    sup_gap = float(np.max(np.abs(md.values - rebuilt.values)))
    md_jumps = md.values - md.left_values
    x_jumps = X.values - X.left_values
    atom_gap = float(np.max(np.abs(md_jumps - x_jumps))) if X.grid.size else 0.0
    scale = max(md.sup_norm(), X.sup_norm(), 1.0)
    return MdRepresentationReport(sup_gap, atom_gap, tol * scale)


# -- continuous-function chain rule -------------------------------------------


@dataclass
class C0ChainReport:
    """Decomposition of F(t, X_t) built without any space derivative."""

    function: str
    a_path: CadlagPath
    compensated: CadlagPath
    jump_abs_total: float
    orth_reports: list
    decision: bool

    def to_json_dict(self) -> dict:
        return {"schema_version": 1, "kind": "c0_chain_report",
                "function": self.function, "decision": self.decision,
                "jump_abs_total": self.jump_abs_total,
                "orth": [r.to_json_dict() for r in self.orth_reports]}


def special_wd_c0_chain(F: FunctionBundle, X: CadlagPath,
                        nu: CompensatorSpec | None = None,
                        schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                        orth_tol: float = ORTH_TOL,
                        test_martingales: list[CadlagPath] | None = None,
                        battery_seed: int = 0) -> C0ChainReport:
    """Chain rule from continuity alone: the compensated integral of the
    untruncated increment field F(s, X_{s-} + x) - F(s, X_{s-}) is removed
    from F(t, X_t) and the remainder is orthogonality-tested.

    Requires the running total of |jump of F(s, X_s)| to be finite on the
    path; continuity of F on the path's value set is the caller's scenario
    assumption.
    """
    lhs = path_of_function(F, X)
    jump_abs = float(np.sum(np.abs(lhs.values[lhs.jump_marks]
                                   - lhs.left_values[lhs.jump_marks])))
    if not np.isfinite(jump_abs):
        raise jmod.IntegrabilityError("jump total of F(t, X_t) is not finite")
    if X.jump_marks.size:
        if nu is None:
            raise ValueError("a compensator model is required for a path with jumps")
        comp = jmod.compensated_integral(increment_field(F), X, nu)
    else:
        comp = _zero_like(X)
    f0 = float(lhs.values[0])
    a_path = from_arrays(X.grid, lhs.values - f0 - comp.values,
                         lhs.left_values - f0 - comp.left_values, rule=LINEAR)
    tests = test_martingales or brownian_battery(X, seed=battery_seed)
    orth = orthogonality_battery(a_path, tests, schedule, orth_tol)
    return C0ChainReport(F.name, a_path, comp, jump_abs, orth,
                         all(r.decision for r in orth))

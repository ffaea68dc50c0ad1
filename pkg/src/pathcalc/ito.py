"""Term-by-term assembly and residual verification of the change-of-variable
identities for finite quadratic variation paths.

Three variants are covered: the smooth (twice differentiable in space) form
with an explicit jump correction sum, its random-measure reformulation with
the small/big jump split, and the Holder-derivative form whose jump sum uses
the symmetric average of the space derivative at both jump endpoints.

Every report carries the named term paths, the pointwise residual against
F(t, X_t) - F(0, X_0), and the residual sup-norm along the window schedule;
the residual is assembled by construction, never fitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jumps as jmod
from .jumps import (CompensatorSpec, IntegrandField, X_SQUARED_FIELD,
                    integrability_report)
from .paths import LINEAR, CadlagPath, from_arrays
from .regularize import (DEFAULT_SCHEDULE, DEFAULT_TOL, EpsilonSchedule,
                         covariation, forward_integral, qv_limit)


class BundleValidationError(ValueError):
    """A supplied derivative disagrees with finite differences of F."""


class NonConvergenceError(RuntimeError):
    """A required bracket estimate did not converge along the schedule."""


# -- function bundles ---------------------------------------------------------

SMOOTHNESS_CLASSES = ("c12", "c01", "c1l", "c0")

_REQUIRED = {"c12": ("dt", "dx", "dxx"), "c01": ("dx",), "c1l": ("dt", "dx"),
             "c0": ()}


@dataclass(frozen=True)
class FunctionBundle:
    """Scalar function F(t, x) with the derivatives its class provides.

    Classes: ``c12`` (dt, dx, dxx), ``c01`` (dx), ``c1l`` (dt, dx with an
    x-Holder dx of exponent ``holder``), ``c0`` (none).  All evaluators must
    broadcast over numpy arrays.
    """

    name: str
    smoothness: str
    f: object
    dt: object = None
    dx: object = None
    dxx: object = None
    holder: float | None = None

    def __post_init__(self):
        if self.smoothness not in SMOOTHNESS_CLASSES:
            raise ValueError(f"unknown smoothness class {self.smoothness!r}")
        for attr in _REQUIRED[self.smoothness]:
            if getattr(self, attr) is None:
                raise ValueError(
                    f"class {self.smoothness} requires evaluator {attr!r}")
        if self.smoothness == "c1l" and self.holder is None:
            object.__setattr__(self, "holder", 1.0)

    def at_least(self, smoothness: str) -> bool:
        order = {"c0": 0, "c01": 1, "c1l": 1, "c12": 2}
        if smoothness == "c1l":
            return self.smoothness in ("c1l", "c12")
        return order[self.smoothness] >= order[smoothness]

    def validate_derivatives(self, t_range, x_range, seed: int = 0,
                             n_probes: int = 100, rtol: float = 1e-4) -> None:
        """Compare supplied derivatives with central finite differences at
        random probe points; raises BundleValidationError on disagreement."""
        rng = np.random.default_rng(seed)
        t = rng.uniform(t_range[0], t_range[1], n_probes)
        x = rng.uniform(x_range[0], x_range[1], n_probes)
        span = max(abs(x_range[0]), abs(x_range[1]), 1.0)

        def check(name, supplied, fd):
            err = np.abs(fd - supplied)
            bad = err > rtol * np.maximum(1.0, np.abs(supplied))
            if np.any(bad):
                i = int(np.argmax(err))
                raise BundleValidationError(
                    f"{self.name}: {name} disagrees with finite differences "
                    f"at (t={t[i]:.4g}, x={x[i]:.4g})")

        if self.dt is not None:
            h = 1e-6 * max(t_range[1] - t_range[0], 1.0)
            tm = np.clip(t, t_range[0] + h, t_range[1] - h)
            check("dt", self.dt(tm, x), (self.f(tm + h, x) - self.f(tm - h, x)) / (2 * h))
        if self.dx is not None:
            h = 1e-6 * span
            check("dx", self.dx(t, x), (self.f(t, x + h) - self.f(t, x - h)) / (2 * h))
        if self.dxx is not None:
            h = 1e-4 * span
            fd2 = (self.f(t, x + h) - 2.0 * self.f(t, x) + self.f(t, x - h)) / (h * h)
            check("dxx", self.dxx(t, x), fd2)


def linear_combination(a: float, F: FunctionBundle, b: float, G: FunctionBundle,
                       name: str | None = None) -> FunctionBundle:
    """a F + b G, with the weaker smoothness class of the two."""
    order = {"c12": 3, "c1l": 2, "c01": 1, "c0": 0}
    cls = F.smoothness if order[F.smoothness] <= order[G.smoothness] else G.smoothness

    def mix(u, v):
        if u is None or v is None:
            return None
        return lambda t, x: a * u(t, x) + b * v(t, x)

    return FunctionBundle(
        name or f"{a:g}*{F.name}+{b:g}*{G.name}", cls,
        f=lambda t, x: a * F.f(t, x) + b * G.f(t, x),
        dt=mix(F.dt, G.dt), dx=mix(F.dx, G.dx), dxx=mix(F.dxx, G.dxx),
        holder=F.holder if cls == "c1l" else None)


def _c(v):
    return lambda t, x: np.full(np.broadcast(np.asarray(t), np.asarray(x)).shape, v)


FUNCTION_CATALOG: dict[str, FunctionBundle] = {
    "identity": FunctionBundle("identity", "c12",
                               f=lambda t, x: np.asarray(x, dtype=float) + 0.0 * np.asarray(t),
                               dt=_c(0.0), dx=_c(1.0), dxx=_c(0.0)),
    "square": FunctionBundle("square", "c12",
                             f=lambda t, x: np.asarray(x) ** 2 + 0.0 * np.asarray(t),
                             dt=_c(0.0), dx=lambda t, x: 2.0 * np.asarray(x),
                             dxx=_c(2.0)),
    "tx": FunctionBundle("tx", "c12",
                         f=lambda t, x: np.asarray(t) * np.asarray(x),
                         dt=lambda t, x: np.asarray(x) + 0.0 * np.asarray(t),
                         dx=lambda t, x: np.asarray(t) + 0.0 * np.asarray(x),
                         dxx=_c(0.0)),
    "sin": FunctionBundle("sin", "c12",
                          f=lambda t, x: np.sin(x) + 0.0 * np.asarray(t),
                          dt=_c(0.0), dx=lambda t, x: np.cos(x) + 0.0 * np.asarray(t),
                          dxx=lambda t, x: -np.sin(x) + 0.0 * np.asarray(t)),
    # space-smooth but rough in time: not differentiable in t at sin zeroes
    "rough_time": FunctionBundle(
        "rough_time", "c01",
        f=lambda t, x: np.asarray(x) * np.sqrt(np.abs(np.sin(8.0 * np.asarray(t)))),
        dx=lambda t, x: np.sqrt(np.abs(np.sin(8.0 * np.asarray(t)))) + 0.0 * np.asarray(x)),
    # first derivative only 1/2-Holder at the origin
    "xabs_sqrt": FunctionBundle(
        "xabs_sqrt", "c1l",
        f=lambda t, x: np.asarray(x) * np.sqrt(np.abs(x)) + 0.0 * np.asarray(t),
        dt=_c(0.0),
        dx=lambda t, x: 1.5 * np.sqrt(np.abs(x)) + 0.0 * np.asarray(t),
        holder=0.5),
}

C12_SUITE = ("identity", "square", "tx", "sin")


# -- path assembly helpers ----------------------------------------------------


def path_of_function(F: FunctionBundle, X: CadlagPath) -> CadlagPath:
    """The path t -> F(t, X_t) on X's grid, with exact left limits
    F(t, X_{t-}) (F is continuous in time)."""
    values = np.asarray(F.f(X.grid, X.values), dtype=float)
    left = np.asarray(F.f(X.grid, X.left_values), dtype=float)
    return from_arrays(X.grid, values, left, rule=LINEAR)


def pre_jump_samples(X: CadlagPath) -> np.ndarray:
    """X(t-) at every grid time, with X(0-) := X(0)."""
    return np.concatenate(([X.values[0]], X.left_values[1:]))


def stieltjes_left(H: CadlagPath, G: CadlagPath) -> CadlagPath:
    """Left-point Stieltjes sum int H_{s-} dG_s on the shared grid.

    Continuous motion between grid points is integrated with the previous
    grid value of H, and each marked jump of G contributes H(t-) dG exactly,
    which makes the sum exact when G is a pure-jump path.
    """
    if not H.same_grid(G):
        raise ValueError("integrand and integrator must share a grid")
    cont_incr = G.left_values[1:] - G.values[:-1]
    cont = np.concatenate(([0.0], np.cumsum(H.values[:-1] * cont_incr)))
    jump_contrib = np.zeros(G.grid.size)
    marks = G.jump_marks
    if marks.size:
        jump_contrib[marks] = H.left_values[marks] * (
            G.values[marks] - G.left_values[marks])
    jump_cum = np.cumsum(jump_contrib)
    values = cont + jump_cum
    left = values.copy()
    if marks.size:
        left[marks] = values[marks] - jump_contrib[marks]
    return from_arrays(G.grid, values, left, rule=LINEAR)


def time_integral(h_samples: np.ndarray, grid: np.ndarray) -> CadlagPath:
    """Running left-endpoint quadrature of a sampled integrand."""
    values = np.concatenate(([0.0], np.cumsum(np.diff(grid) * h_samples[:-1])))
    return from_arrays(grid, values, values.copy(), rule=LINEAR)


def taylor_remainder_field(F: FunctionBundle, truncation=None,
                           threshold=jmod.JUMP_SPLIT_THRESHOLD) -> IntegrandField:
    """W(s, x) = F(s, X_{s-} + x) - F(s, X_{s-}) - x dF_x(s, X_{s-})."""
    def fn(t, x, pre):
        return F.f(t, pre + x) - F.f(t, pre) - x * F.dx(t, pre)
    return IntegrandField(fn, truncation, threshold)


def increment_field(F: FunctionBundle, truncation=None,
                    threshold=jmod.JUMP_SPLIT_THRESHOLD) -> IntegrandField:
    """K(s, x) = F(s, X_{s-} + x) - F(s, X_{s-})."""
    def fn(t, x, pre):
        return F.f(t, pre + x) - F.f(t, pre)
    return IntegrandField(fn, truncation, threshold)


def linear_jump_field(F: FunctionBundle, truncation=None,
                      threshold=jmod.JUMP_SPLIT_THRESHOLD) -> IntegrandField:
    """Y(s, x) = x dF_x(s, X_{s-})."""
    def fn(t, x, pre):
        return x * F.dx(t, pre)
    return IntegrandField(fn, truncation, threshold)


# -- continuous bracket part --------------------------------------------------


def qv_continuous_part(X: CadlagPath, schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                       tol: float = DEFAULT_TOL) -> CadlagPath:
    """Estimated bracket minus the running sum of squared jumps, clipped at
    its running maximum so the result is a nondecreasing continuous path."""
    path, _ = _qv_cont(X, schedule, tol)
    return path


def _qv_cont(X, schedule, tol):
    rep = qv_limit(X, schedule=schedule, tol=tol)
    if not rep.converged:
        raise NonConvergenceError(
            "bracket estimate did not converge along the schedule")
    jump_part = jmod.integrate_mu(X_SQUARED_FIELD, X)
    raw = rep.limit.values - jump_part.values
    mono = np.maximum.accumulate(np.maximum(raw, 0.0))
    mono[0] = 0.0
    return from_arrays(X.grid, mono, mono.copy(), rule=LINEAR), rep


# -- reports ------------------------------------------------------------------


@dataclass
class ItoReport:
    """Named terms of one identity variant plus the assembled residual.

    ``terms`` holds signed paths: the residual is
    lhs - initial_value - sum(terms) pointwise by construction, evaluated at
    the final window width; ``residual_sup_by_eps`` tracks the sup-norm of
    the same assembly as the window shrinks along the schedule.
    """

    variant: str
    function: str
    lhs: CadlagPath
    initial_value: float
    terms: dict
    residual: CadlagPath
    residual_sup_by_eps: np.ndarray
    epsilons: tuple
    parts: dict = field(default_factory=dict)

    @property
    def final_residual_sup(self) -> float:
        return float(self.residual_sup_by_eps[-1])

    def relative_residual(self) -> float:
        return self.final_residual_sup / max(self.lhs.sup_norm(), 1e-12)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "ito_report",
            "variant": self.variant,
            "function": self.function,
            "initial_value": self.initial_value,
            "epsilons": list(self.epsilons),
            "residual_sup_by_eps": self.residual_sup_by_eps.tolist(),
            "final_residual_sup": self.final_residual_sup,
            "relative_residual": self.relative_residual(),
            "terms": sorted(self.terms),
        }


def _residual_paths(lhs, f0, fixed_paths, per_eps_paths):
    sups = []
    final = None
    for fp in per_eps_paths:
        r = lhs.values - f0 - fp.values
        rl = lhs.left_values - f0 - fp.left_values
        for q in fixed_paths:
            r = r - q.values
            rl = rl - q.left_values
        sups.append(float(max(np.max(np.abs(r)), np.max(np.abs(rl)))))
        final = (r, rl)
    res = from_arrays(lhs.grid, final[0], final[0].copy(), rule=LINEAR)
    return res, np.asarray(sups)


def _validated(F, X, smoothness, validate):
    if not F.at_least(smoothness):
        raise ValueError(f"{F.name} is not of class {smoothness}")
    if validate:
        lo = float(min(np.min(X.values), np.min(X.left_values)))
        hi = float(max(np.max(X.values), np.max(X.left_values)))
        pad = 0.1 * max(hi - lo, 1.0)
        F.validate_derivatives((0.0, X.horizon), (lo - pad, hi + pad))


def ito_terms_c12(F: FunctionBundle, X: CadlagPath,
                  schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                  tol: float = DEFAULT_TOL, validate: bool = True) -> ItoReport:
    """Smooth-case identity: time integral, forward integral of dF_x(s, X_s),
    half the second derivative against the continuous bracket part, and the
    jump correction sum."""
    _validated(F, X, "c12", validate)
    qvc, _ = _qv_cont(X, schedule, tol)
    lhs = path_of_function(F, X)
    f0 = float(lhs.values[0])
    grid = X.grid
    pre = pre_jump_samples(X)
    time_term = time_integral(np.asarray(F.dt(grid, X.values), dtype=float), grid)
    d2_pre = from_arrays(grid, np.asarray(F.dxx(grid, pre), dtype=float),
                         np.asarray(F.dxx(grid, pre), dtype=float), rule=LINEAR)
    bracket_term = 0.5 * stieltjes_left(d2_pre, qvc)
    jump_sum = jmod.integrate_mu(taylor_remainder_field(F), X)
    integrand = path_of_function_derivative(F, X)
    forwards = [forward_integral(integrand, X, e) for e in schedule]
    residual, sups = _residual_paths(lhs, f0, [time_term, bracket_term, jump_sum],
                                     forwards)
    terms = {"time_integral": time_term, "forward_integral": forwards[-1],
             "bracket_term": bracket_term, "jump_sum": jump_sum}
    return ItoReport("c12", F.name, lhs, f0, terms, residual, sups,
                     tuple(schedule.epsilons))


def path_of_function_derivative(F: FunctionBundle, X: CadlagPath) -> CadlagPath:
    """The path t -> dF_x(t, X_t) with left limits dF_x(t, X_{t-})."""
    values = np.asarray(F.dx(X.grid, X.values), dtype=float)
    left = np.asarray(F.dx(X.grid, X.left_values), dtype=float)
    return from_arrays(X.grid, values, left, rule=LINEAR)


def ito_terms_measure_form(F: FunctionBundle, X: CadlagPath, nu: CompensatorSpec,
                           schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                           tol: float = DEFAULT_TOL, validate: bool = True,
                           threshold: float = jmod.JUMP_SPLIT_THRESHOLD) -> ItoReport:
    """Random-measure form: the jump correction is split into two compensated
    small-jump integrals, the big-jump sum, and the small-jump compensator
    integral.  The mu and nu sides of every jump term are kept separately in
    ``parts`` so the atom-level reassembly into the plain jump sum can be
    checked exactly."""
    _validated(F, X, "c12", validate)
    diag = integrability_report(X, F, threshold)
    if not diag.square_summable:
        raise jmod.IntegrabilityError("squared jump total is not finite")
    qvc, _ = _qv_cont(X, schedule, tol)
    lhs = path_of_function(F, X)
    f0 = float(lhs.values[0])
    grid = X.grid
    pre = pre_jump_samples(X)
    time_term = time_integral(np.asarray(F.dt(grid, X.values), dtype=float), grid)
    d2 = np.asarray(F.dxx(grid, pre), dtype=float)
    bracket_term = 0.5 * stieltjes_left(
        from_arrays(grid, d2, d2.copy(), rule=LINEAR), qvc)
    if X.jump_marks.size:
        k_mu, k_nu = jmod.compensated_parts(
            increment_field(F, "small", threshold), X, nu)
        y_mu, y_nu = jmod.compensated_parts(
            linear_jump_field(F, "small", threshold), X, nu)
        big_mu = jmod.integrate_mu(taylor_remainder_field(F, "big", threshold), X)
        small_nu = jmod.integrate_nu(taylor_remainder_field(F, "small", threshold),
                                     nu, X)
    else:
        # no atoms: the mu sides vanish and the nu sides cancel identically
        # (the compensator remainder equals the compensated field difference),
        # so every jump term is exactly the zero path
        zero = from_arrays(grid, np.zeros(grid.size), np.zeros(grid.size),
                           rule=LINEAR)
        k_mu = k_nu = y_mu = y_nu = big_mu = small_nu = zero
    terms = {
        "time_integral": time_term,
        "bracket_term": bracket_term,
        "small_jump_compensated_increment": k_mu - k_nu,
        "small_jump_compensated_linear": -1.0 * (y_mu - y_nu),
        "big_jump_sum": big_mu,
        "small_jump_compensator": small_nu,
    }
    integrand = path_of_function_derivative(F, X)
    forwards = [forward_integral(integrand, X, e) for e in schedule]
    residual, sups = _residual_paths(lhs, f0, list(terms.values()), forwards)
    terms["forward_integral"] = forwards[-1]
    parts = {"increment_mu": k_mu, "increment_nu": k_nu, "linear_mu": y_mu,
             "linear_nu": y_nu, "big_mu": big_mu, "small_nu": small_nu,
             "jump_sum": jmod.integrate_mu(taylor_remainder_field(F), X)}
    return ItoReport("measure_form", F.name, lhs, f0, terms, residual, sups,
                     tuple(schedule.epsilons), parts)


def ito_c1_lambda(F: FunctionBundle, X: CadlagPath,
                  schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
                  tol: float = DEFAULT_TOL, validate: bool = True) -> ItoReport:
    """Holder-derivative form for time-reversible integrators: left-point
    reference integral, half the bracket of the transformed path against X,
    and the symmetric-average jump sum.

    Requires sum |dX|^(1 + holder) finite on the path; reversibility of the
    integrator is an assumption carried by the scenario, not verified here.
    """
    _validated(F, X, "c1l", validate)
    lam = F.holder if F.holder is not None else 1.0
    power_sum = float(np.sum(np.abs(X.jump_sizes) ** (1.0 + lam)))
    if not np.isfinite(power_sum):
        raise jmod.IntegrabilityError(
            "jump sizes are not (1 + holder)-power summable")
    lhs = path_of_function(F, X)
    f0 = float(lhs.values[0])
    grid = X.grid
    time_term = time_integral(np.asarray(F.dt(grid, X.values), dtype=float), grid)
    integrand = path_of_function_derivative(F, X)
    ito_ref = stieltjes_left(integrand, X)

    def sym_fn(t, x, pre):
        return (F.f(t, pre + x) - F.f(t, pre)
                - 0.5 * (F.dx(t, pre + x) + F.dx(t, pre)) * x)

    sym_jump = jmod.integrate_mu(IntegrandField(sym_fn), X)
    brackets = [0.5 * covariation(integrand, X, e) for e in schedule]
    residual, sups = _residual_paths(lhs, f0, [time_term, ito_ref, sym_jump],
                                     brackets)
    terms = {"time_integral": time_term, "reference_integral": ito_ref,
             "half_transformed_bracket": brackets[-1],
             "symmetric_jump_sum": sym_jump}
    return ItoReport("c1_holder", F.name, lhs, f0, terms, residual, sups,
                     tuple(schedule.epsilons))

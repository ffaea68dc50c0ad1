"""Smoothing-window estimator kernels and the uniform-limit driver.

For paths X, Y on a shared grid and a window width eps the kernels compute,
for every grid time t at once,

    forward      I(eps, t) = int_(0,t] Y(s) (X((s+eps) ^ t) - X(s)) / eps ds
    covariation  C(eps, t) = int_(0,t] (X((s+eps) ^ t) - X(s))
                                       (Y((s+eps) ^ t) - Y(s)) / eps ds

together with the untruncated variant (X(s+eps) with the path extended past
its horizon by continuity) and a caglad-weighted quadratic sum.

Quadrature convention: every ds-integral is a left-endpoint Riemann sum on
the sample mesh formed by the path grid plus the shifted jump breakpoints
{tau - eps}.  With those breakpoints present the integrand is exactly
piecewise constant whenever the inputs are, so the kernels are exact on
piecewise-constant paths.  Splitting each integral at t - eps turns the
computation into prefix sums: O(n) work for all t after an O(n log n) sort,
which a literal O(n^2) per-t transcription (``brute_*`` below) must match to
floating-point reassociation accuracy.

All kernels are pure functions; per-eps evaluations inside ``ucp_limit`` are
independent and may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import LINEAR, CadlagPath, PathError, from_arrays

DEFAULT_EPS_MAX = 0.05
DEFAULT_LEVELS = 8
DEFAULT_TOL = 1e-2


class ScheduleError(ValueError):
    """Raised when a window schedule does not fit a path's grid."""


@dataclass(frozen=True)
class EpsilonSchedule:
    """Strictly decreasing window widths driving a convergence study."""

    epsilons: tuple[float, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise ScheduleError("empty schedule")
        if any(e <= 0.0 for e in eps):
            raise ScheduleError("window widths must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ScheduleError("window widths must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)

    def __iter__(self):
        return iter(self.epsilons)

    def __len__(self):
        return len(self.epsilons)

    @classmethod
    def geometric(cls, eps_max: float = DEFAULT_EPS_MAX, levels: int = DEFAULT_LEVELS,
                  ratio: float = 0.5) -> "EpsilonSchedule":
        """eps_k = eps_max * ratio^k for k = 1..levels (default 0.05 * 2^-k)."""
        return cls(tuple(eps_max * ratio ** k for k in range(1, levels + 1)))

    def snapped(self, dt: float) -> "EpsilonSchedule":
        """Round every width to a positive integer multiple of ``dt``."""
        if dt <= 0.0:
            raise ScheduleError("spacing must be positive")
        snapped = [max(round(e / dt), 1) * dt for e in self.epsilons]
        out = []
        for e in snapped:
            if not out or e < out[-1]:
                out.append(e)
        return EpsilonSchedule(tuple(out))

    def validate_for(self, path: CadlagPath, base_dt: float | None = None) -> None:
        """Check the schedule fits the grid: eps < T, eps a multiple of the
        base spacing, and the smallest eps at least ten spacings wide."""
        dt = float(base_dt) if base_dt else path.min_spacing
        T = path.horizon
        for e in self.epsilons:
            if e >= T:
                raise ScheduleError(f"window {e} is not below the horizon {T}")
            k = e / dt
            if abs(k - round(k)) > 1e-6:
                raise ScheduleError(f"window {e} is not a multiple of spacing {dt}")
        if self.epsilons[-1] < 10.0 * dt - 1e-12 * dt:
            raise ScheduleError("smallest window must span at least ten grid cells")

    def for_path(self, path: CadlagPath, base_dt: float | None = None) -> "EpsilonSchedule":
        dt = float(base_dt) if base_dt else path.min_spacing
        s = self.snapped(dt)
        s.validate_for(path, dt)
        return s


DEFAULT_SCHEDULE = EpsilonSchedule.geometric()


# -- sample mesh -------------------------------------------------------------


def _cumsum0(a: np.ndarray) -> np.ndarray:
    out = np.empty(a.size + 1)
    out[0] = 0.0
    np.cumsum(a, out=out[1:])
    return out


class _Mesh:
    """Shared sample mesh for one (X, Y, eps) kernel evaluation.

    ``sl`` are the cell left endpoints (grid plus shifted jump breakpoints),
    ``w`` the cell widths, ``u`` the shifted sample points.  For a cell whose
    left endpoint is an inserted breakpoint tau - eps, ``u`` is pinned to tau
    exactly so the lookup lands on the post-jump value.
    """

    def __init__(self, X: CadlagPath, Y: CadlagPath, eps: float):
        if not X.same_grid(Y):
            raise PathError("paths must share a grid")
        eps = float(eps)
        T = X.horizon
        if eps >= T:
            raise ValueError("window width must be below the horizon")
        if eps <= 0.0 or eps < X.min_spacing:
            raise ValueError("window width must cover at least one grid cell")
        grid = X.grid
        taus = np.union1d(X.jump_times, Y.jump_times)
        shifted = taus - eps
        keep = (shifted > 0.0) & (shifted < T)
        taus, shifted = taus[keep], shifted[keep]
        on_grid = np.zeros(0, dtype=np.intp)
        on_grid_tau = np.zeros(0)
        if shifted.size:
            ins = np.searchsorted(grid, shifted)
            hit = grid[np.minimum(ins, grid.size - 1)] == shifted
            on_grid, on_grid_tau = ins[hit], taus[hit]
            taus, shifted, ins = taus[~hit], shifted[~hit], ins[~hit]
        if shifted.size:
            S = np.insert(grid, ins, shifted)
            pos = np.arange(grid.size) + np.searchsorted(shifted, grid, side="left")
            ins_cells = ins + np.arange(shifted.size)
            sl = S[:-1]
            u = sl + eps
            u[ins_cells] = taus
            if on_grid.size:
                u[pos[on_grid]] = on_grid_tau
            np.maximum.accumulate(u, out=u)
            Xs = np.empty(sl.size)
            Ys = np.empty(sl.size)
            grid_cells = np.ones(sl.size, dtype=bool)
            grid_cells[ins_cells] = False
            Xs[grid_cells] = X.values[:-1]
            Xs[ins_cells] = X.value_at(shifted)
            if Y is X:
                Ys = Xs
            else:
                Ys[grid_cells] = Y.values[:-1]
                Ys[ins_cells] = Y.value_at(shifted)
        else:
            S = grid
            pos = np.arange(grid.size)
            sl = S[:-1]
            u = sl + eps
            if on_grid.size:
                u[on_grid] = on_grid_tau
                np.maximum.accumulate(u, out=u)
            Xs = X.values[:-1]
            Ys = Y.values[:-1]
        self.eps = eps
        self.grid = grid
        self.S = S
        self.sl = sl
        self.w = np.diff(S)
        self.u = u
        self.Xs = Xs
        self.Ys = Ys
        self.Xu = X.value_at(u)
        self.Yu = self.Xu if Y is X else Y.value_at(u)
        self.pos = pos
        # bulk cells for value/left limit at t: shifted point u <= t / u < t
        self.jr = np.searchsorted(u, grid, side="right")
        self.jl = np.searchsorted(u, grid, side="left")
        self.X = X
        self.Y = Y

    def weight_samples(self, g: CadlagPath) -> np.ndarray:
        """Caglad weight sampled at cell left endpoints (left limits)."""
        if not g.same_grid(self.X):
            raise PathError("weight path must share the grid")
        out = np.empty(self.sl.size)
        out[0] = g.value_at(0.0)
        if self.sl.size > 1:
            out[1:] = g.left_limit(self.sl[1:])
        return out


def _estimator_path(grid: np.ndarray, vals: np.ndarray, lefts: np.ndarray,
                    jump_idx: np.ndarray) -> CadlagPath:
    # the continuous-time estimator only jumps where its inputs do; elsewhere
    # the boundary-window algebra leaves reassociation dust, which is dropped
    left_final = vals.copy()
    left_final[jump_idx] = lefts[jump_idx]
    left_final[0] = vals[0]
    return from_arrays(grid, vals, left_final, rule=LINEAR)


def _input_jump_indices(X: CadlagPath, Y: CadlagPath | None = None) -> np.ndarray:
    idx = X.jump_marks
    if Y is not None and Y is not X:
        idx = np.union1d(idx, Y.jump_marks).astype(np.intp)
    return idx


# -- kernels -----------------------------------------------------------------


def covariation(X: CadlagPath, Y: CadlagPath, eps: float) -> CadlagPath:
    """[X, Y] window estimate as a path over t, O(n) for all grid times."""
    m = _Mesh(X, Y, eps)
    cX, cY = X.values[0], Y.values[0]
    # association is kept symmetric in X and Y so that swapping the
    # arguments returns bit-identical values
    bulk = _cumsum0(m.w * ((m.Xu - m.Xs) * (m.Yu - m.Ys)))
    xs, ys = m.Xs - cX, m.Ys - cY
    Sw = _cumsum0(m.w)
    SwX = _cumsum0(m.w * xs)
    SwY = _cumsum0(m.w * ys)
    SwXY = _cumsum0(m.w * (xs * ys))

    def assemble(j, Xm, Ym):
        rw = Sw[m.pos] - Sw[j]
        rx = SwX[m.pos] - SwX[j]
        ry = SwY[m.pos] - SwY[j]
        rxy = SwXY[m.pos] - SwXY[j]
        return (bulk[j] + (Xm * Ym * rw + rxy) - (Xm * ry + Ym * rx)) / m.eps

    vals = assemble(m.jr, X.values - cX, Y.values - cY)
    lefts = assemble(m.jl, X.left_values - cX, Y.left_values - cY)
    return _estimator_path(m.grid, vals, lefts, _input_jump_indices(X, Y))


def forward_integral(Y: CadlagPath, X: CadlagPath, eps: float) -> CadlagPath:
    """Window estimate of int Y d-X as a path over t, O(n) for all t."""
    m = _Mesh(X, Y, eps)
    cX = X.values[0]
    bulk = _cumsum0(m.w * m.Ys * (m.Xu - m.Xs))
    xs = m.Xs - cX
    SwY = _cumsum0(m.w * m.Ys)
    SwYX = _cumsum0(m.w * m.Ys * xs)

    def assemble(j, Xm):
        ry = SwY[m.pos] - SwY[j]
        ryx = SwYX[m.pos] - SwYX[j]
        return (bulk[j] + Xm * ry - ryx) / m.eps

    vals = assemble(m.jr, X.values - cX)
    lefts = assemble(m.jl, X.left_values - cX)
    return _estimator_path(m.grid, vals, lefts, _input_jump_indices(X, Y))


def weighted_qv(g: CadlagPath, X: CadlagPath, eps: float) -> CadlagPath:
    """Weighted squared-increment estimate int g(s)(X((s+eps)^t)-X(s))^2/eps ds.

    ``g`` carries caglad weights: it is sampled through its left limits, so
    with g identically one this is exactly ``covariation(X, X, eps)``.
    """
    m = _Mesh(X, X, eps)
    cX = X.values[0]
    gs = m.weight_samples(g)
    # mirrors the covariation(X, X) associations so that g == 1 reproduces
    # it bit for bit
    dX = m.Xu - m.Xs
    bulk = _cumsum0(m.w * gs * (dX * dX))
    xs = m.Xs - cX
    Swg = _cumsum0(m.w * gs)
    SwgX = _cumsum0(m.w * gs * xs)
    SwgXX = _cumsum0(m.w * gs * (xs * xs))

    def assemble(j, Xm):
        rg = Swg[m.pos] - Swg[j]
        rgx = SwgX[m.pos] - SwgX[j]
        rgxx = SwgXX[m.pos] - SwgXX[j]
        return (bulk[j] + (Xm * Xm * rg + rgxx) - (Xm * rgx + Xm * rgx)) / m.eps

    vals = assemble(m.jr, X.values - cX)
    lefts = assemble(m.jl, X.left_values - cX)
    return _estimator_path(m.grid, vals, lefts, _input_jump_indices(X))


def covariation_continuous(X: CadlagPath, Y: CadlagPath, eps: float) -> CadlagPath:
    """Untruncated window estimate C(eps): X(s + eps) without the ^ t cap,
    using the extension of the paths past the horizon by continuity.  The
    result is continuous in t."""
    m = _Mesh(X, Y, eps)
    bulk = _cumsum0(m.w * (m.Xu - m.Xs) * (m.Yu - m.Ys))
    vals = bulk[m.pos] / m.eps
    return from_arrays(m.grid, vals, vals.copy(), rule=LINEAR)


def forward_integral_rv(Y: CadlagPath, X: CadlagPath, eps: float) -> CadlagPath:
    """Whole-line windowed variant of the forward estimate.

    Compared to ``forward_integral`` the integrand is extended by Y(0+) to
    the left of zero and frozen past t, which adds the start-up window
    Y(0+) (1/eps) int_0^eps [X(s) - X(0+)] ds once t >= eps.
    """
    base = forward_integral(Y, X, eps)
    eps = float(eps)
    grid = X.grid
    y0 = Y.values[0]
    x0 = X.values[0]
    # left-endpoint quadrature of Q(a) = int_0^a (X - X(0)) ds with a partial
    # final cell, evaluated at a = eps ^ t for every grid t
    cells = np.searchsorted(grid, eps, side="left")
    qcum = _cumsum0(np.diff(grid[: cells + 1]) * (X.values[: cells] - x0))

    def q_at(a):
        a = np.minimum(a, eps)
        i = np.searchsorted(grid, a, side="right") - 1
        i = np.minimum(i, cells - 1)
        return qcum[i] + (a - grid[i]) * (X.values[i] - x0)

    tail = np.clip(eps - grid, 0.0, None)
    wvals = y0 * (q_at(grid) + tail * (X.values - x0)) / eps
    wlefts = y0 * (q_at(grid) + tail * (X.left_values - x0)) / eps
    vals = base.values + wvals
    lefts = base.left_values + wlefts
    return _estimator_path(grid, vals, lefts, _input_jump_indices(X, Y))


def rv_window_constant(Y: CadlagPath, X: CadlagPath, eps: float) -> float:
    """Closed-form start-up gap Y(0+) (1/eps) int_0^eps [X(s) - X(0+)] ds,
    under the shared left-endpoint quadrature."""
    eps = float(eps)
    grid = X.grid
    edges = np.union1d(grid[grid < eps], [eps])
    lefts = edges[:-1]
    widths = np.diff(edges)
    return float(Y.values[0] * np.sum(widths * (X.value_at(lefts) - X.values[0])) / eps)


def rv_ucp_gap(Y: CadlagPath, X: CadlagPath, eps: float, rtol: float = 1e-9) -> float:
    """Sup over grid times of (truncated minus whole-line forward estimate).

    Asserts that for every grid time t >= eps the gap equals minus the
    closed-form start-up window, raising if the identity fails beyond
    ``rtol`` (relative to the estimate scale).
    """
    ucp = forward_integral(Y, X, eps)
    rv = forward_integral_rv(Y, X, eps)
    diff = ucp.values - rv.values
    const = rv_window_constant(Y, X, eps)
    sel = X.grid >= eps
    scale = max(ucp.sup_norm(), abs(const), 1.0)
    worst = float(np.max(np.abs(diff[sel] + const))) if np.any(sel) else 0.0
    if worst > rtol * scale:
        raise AssertionError(
            f"window-gap identity violated: |gap + {const!r}| reaches {worst!r}")
    return float(np.max(diff))


# -- literal per-t transcriptions (oracles) ----------------------------------


def brute_forward_integral(Y: CadlagPath, X: CadlagPath, eps: float) -> np.ndarray:
    """Literal O(n^2) per-t evaluation of the forward estimate on the same
    sample mesh; returns values at grid times."""
    m = _Mesh(X, Y, eps)
    out = np.zeros(m.grid.size)
    for i in range(1, m.grid.size):
        t = m.grid[i]
        k = m.pos[i]
        capped = np.where(m.u[:k] <= t, m.Xu[:k], X.values[i])
        out[i] = np.sum(m.w[:k] * m.Ys[:k] * (capped - m.Xs[:k])) / m.eps
    return out


def brute_covariation(X: CadlagPath, Y: CadlagPath, eps: float) -> np.ndarray:
    """Literal O(n^2) per-t evaluation of the covariation estimate."""
    m = _Mesh(X, Y, eps)
    out = np.zeros(m.grid.size)
    for i in range(1, m.grid.size):
        t = m.grid[i]
        k = m.pos[i]
        inside = m.u[:k] <= t
        xcap = np.where(inside, m.Xu[:k], X.values[i])
        ycap = np.where(inside, m.Yu[:k], Y.values[i])
        out[i] = np.sum(m.w[:k] * (xcap - m.Xs[:k]) * (ycap - m.Ys[:k])) / m.eps
    return out


# -- uniform-limit driver ----------------------------------------------------


@dataclass
class LimitReport:
    """Convergence diagnostics of an estimator along a window schedule.

    ``converged`` is a Cauchy test along the sampled schedule only (final
    sup-norm gap below tol relative to the last estimate); it is a surrogate
    for the limit notion, and non-convergence is a first-class outcome.
    """

    epsilons: tuple[float, ...]
    estimates: list[CadlagPath]
    sup_gaps: np.ndarray
    sup_norms: np.ndarray
    tol: float
    converged: bool

    @property
    def limit(self) -> CadlagPath:
        """Last estimate, used as the limit proxy once converged."""
        return self.estimates[-1]

    @property
    def gaps_increasing(self) -> bool:
        return bool(np.all(np.diff(self.sup_gaps) >= 0.0))

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "limit_report",
            "epsilons": list(self.epsilons),
            "sup_gaps": self.sup_gaps.tolist(),
            "sup_norms": self.sup_norms.tolist(),
            "tol": self.tol,
            "converged": self.converged,
        }


def ucp_limit(estimator, X: CadlagPath, Y: CadlagPath | None = None,
              schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
              tol: float = DEFAULT_TOL) -> LimitReport:
    """Run ``estimator`` along the schedule and test sup-norm Cauchy decay.

    ``estimator`` is called as estimator(X, eps) or estimator(X, Y, eps).
    The report keeps every estimate and the raw gap array so callers can
    apply their own criteria.
    """
    for e in schedule:
        if e >= X.horizon or e < X.min_spacing:
            raise ScheduleError(f"window {e} does not fit the grid")
    estimates = []
    for e in schedule:
        estimates.append(estimator(X, e) if Y is None else estimator(X, Y, e))
    sup_norms = np.array([p.sup_norm() for p in estimates])
    gaps = np.array([
        float(np.max(np.abs(b.values - a.values)))
        for a, b in zip(estimates, estimates[1:])
    ])
    scale = max(sup_norms[-1], 1e-12)
    converged = bool(gaps.size == 0 or gaps[-1] <= tol * scale)
    return LimitReport(tuple(schedule.epsilons), estimates, gaps, sup_norms,
                       float(tol), converged)


def qv_limit(X: CadlagPath, schedule: EpsilonSchedule = DEFAULT_SCHEDULE,
             tol: float = DEFAULT_TOL) -> LimitReport:
    """Quadratic-variation study: ``covariation(X, X)`` along the schedule."""
    return ucp_limit(covariation, X, X, schedule=schedule, tol=tol)


def modulus_of_continuity(X: CadlagPath, eps: float) -> float:
    """max |X(a) - X(t)| over grid pairs with |a - t| <= eps."""
    grid, v = X.grid, X.values
    out = 0.0
    for d in range(1, grid.size):
        if np.all(grid[d:] - grid[:-d] > eps):
            break
        ok = (grid[d:] - grid[:-d]) <= eps
        if np.any(ok):
            out = max(out, float(np.max(np.abs(v[d:] - v[:-d])[ok])))
    return out

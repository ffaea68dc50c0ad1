"""Seeded path generators with ground-truth metadata.

Every generator returns a (path, GroundTruth) pair.  Jump times are sampled
exactly and inserted into the grid as their own nodes, never binned, so the
path carries exact jump sizes at exact times.  The ground truth records the
jump log, the known closed-form bracket when one exists, and the labeled
decomposition components (each a path on the same grid).

Randomness comes from numpy's counter-based Philox generator seeded as
Philox(seed=[seed, stream]); identical specs therefore reproduce bit
identical paths, and derived draws (refinement, test batteries) use
disjoint streams.  Generators are pure functions of their spec, so Monte
Carlo drivers may call them concurrently with distinct seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .jumps import CompensatorSpec, DiracLaw, JumpLaw
from .paths import (LINEAR, PIECEWISE_CONSTANT, CadlagPath, from_arrays,
                    uniform_grid)

KINDS = ("brownian", "poisson", "compound_poisson", "jump_diffusion", "fbm",
         "convolution_martingale", "pdp", "deterministic")

FBM_MAX_CELLS = 4096  # dense Cholesky; exactness is the point, not speed


class SimulationError(ValueError):
    pass


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed=[int(seed), int(stream)]))


@dataclass(frozen=True)
class SimSpec:
    """Process description: kind plus per-kind parameters, grid size, seed."""

    kind: str
    T: float = 1.0
    n: int = 1000
    seed: int = 0
    x0: float = 0.0
    sigma: float = 1.0
    drift: float = 0.0
    intensity: float = 1.0
    jump_law: JumpLaw | None = None
    hurst: float = 0.5
    regimes: tuple = ()
    switch_rate: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SimulationError(f"unknown process kind {self.kind!r}")
        if self.T <= 0.0:
            raise SimulationError("horizon must be positive")
        if self.n < 2:
            raise SimulationError("need at least two grid cells")
        if self.sigma < 0.0:
            raise SimulationError("volatility must be nonnegative")
        if self.intensity < 0.0:
            raise SimulationError("jump intensity must be nonnegative")
        if not 0.0 < self.hurst < 1.0:
            raise SimulationError("hurst exponent must lie in (0, 1)")

    @property
    def base_dt(self) -> float:
        return self.T / self.n


@dataclass
class GroundTruth:
    """Oracle metadata emitted alongside a simulated path."""

    kind: str
    base_dt: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    bracket: CadlagPath | None = None
    bracket_divergent: bool = False
    decomposition: dict | None = None
    compensator: CompensatorSpec | None = None
    regime_bounds: np.ndarray | None = None
    assumes_reversible: bool = False

    def to_json_dict(self) -> dict:
        d = {
            "schema_version": 1,
            "kind": "ground_truth",
            "process": self.kind,
            "base_dt": self.base_dt,
            "jump_times": self.jump_times.tolist(),
            "jump_sizes": self.jump_sizes.tolist(),
            "bracket_divergent": self.bracket_divergent,
            "bracket_terminal": (None if self.bracket is None
                                 else float(self.bracket.values[-1])),
            "decomposition_roles": (sorted(self.decomposition)
                                    if self.decomposition else []),
            "compensator": (self.compensator.to_json_dict()
                            if self.compensator else None),
            "assumes_reversible": self.assumes_reversible,
        }
        if self.regime_bounds is not None:
            d["regime_bounds"] = self.regime_bounds.tolist()
        return d


def _merge_jump_times(base: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Union of the base grid with exact jump times (open interval (0, T))."""
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) <= 0.0)):
        raise SimulationError("sampled jump times must be strictly increasing")
    return np.union1d(base, times)


def _sample_arrivals(rng, lam: float, T: float) -> np.ndarray:
    if lam == 0.0:
        return np.zeros(0)
    out = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / lam)
        if t >= T:
            break
        out.append(t)
    return np.asarray(out)


def _brownian_values(rng, grid: np.ndarray, sigma: float) -> np.ndarray:
    incr = rng.standard_normal(grid.size - 1) * (sigma * np.sqrt(np.diff(grid)))
    return np.concatenate(([0.0], np.cumsum(incr)))


def _jump_cumsum(grid, times, sizes):
    """Right-continuous running sum of jump sizes and its left limits."""
    values = np.zeros(grid.size)
    left = np.zeros(grid.size)
    if times.size:
        cum = np.cumsum(sizes)
        idx = np.searchsorted(times, grid, side="right")
        values = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        idxl = np.searchsorted(times, grid, side="left")
        left = np.where(idxl > 0, cum[np.maximum(idxl - 1, 0)], 0.0)
    return values, left


def _bracket_with_jumps(grid, cont_slope, times, sizes):
    """Closed-form bracket path cont_slope * t + sum of squared jumps."""
    jv, jl = _jump_cumsum(grid, times, sizes ** 2)
    return from_arrays(grid, cont_slope * grid + jv, cont_slope * grid + jl,
                       rule=LINEAR)


# -- generators --------------------------------------------------------------


def brownian(spec: SimSpec):
    if spec.kind != "brownian":
        raise SimulationError("spec kind mismatch")
    grid = uniform_grid(spec.T, spec.n)
    w = _brownian_values(_rng(spec.seed), grid, spec.sigma)
    values = spec.x0 + w
    path = from_arrays(grid, values, values.copy(), rule=LINEAR)
    x0 = np.full(grid.size, spec.x0)
    gt = GroundTruth(
        kind="brownian", base_dt=spec.base_dt,
        jump_times=np.zeros(0), jump_sizes=np.zeros(0),
        bracket=from_arrays(grid, spec.sigma ** 2 * grid,
                            spec.sigma ** 2 * grid, rule=LINEAR),
        decomposition={
            "M_c": from_arrays(grid, w, w.copy(), rule=LINEAR),
            "M_d": _zero(grid),
            "A": from_arrays(grid, x0, x0.copy(), rule=LINEAR),
        },
        assumes_reversible=True,
    )
    return path, gt


def _zero(grid):
    z = np.zeros(grid.size)
    return from_arrays(grid, z, z.copy(), rule=LINEAR)


def _compound_poisson_core(spec, law: JumpLaw):
    rng = _rng(spec.seed)
    times = _sample_arrivals(rng, spec.intensity, spec.T)
    sizes = law.sample(rng, times.size)
    keep = sizes != 0.0
    times, sizes = times[keep], sizes[keep]
    grid = _merge_jump_times(uniform_grid(spec.T, spec.n), times)
    jv, jl = _jump_cumsum(grid, times, sizes)
    return grid, times, sizes, jv, jl


def poisson(spec: SimSpec):
    if spec.kind != "poisson":
        raise SimulationError("spec kind mismatch")
    if spec.intensity <= 0.0:
        raise SimulationError("poisson intensity must be positive")
    law = DiracLaw(1.0)
    grid, times, sizes, jv, jl = _compound_poisson_core(spec, law)
    path = from_arrays(grid, spec.x0 + jv, spec.x0 + jl, rule=PIECEWISE_CONSTANT)
    lam = spec.intensity
    comp = CompensatorSpec.poisson(lam)
    drift = lam * grid
    gt = GroundTruth(
        kind="poisson", base_dt=spec.base_dt, jump_times=times, jump_sizes=sizes,
        bracket=_bracket_with_jumps(grid, 0.0, times, sizes),
        decomposition={
            "M_c": _zero(grid),
            "M_d": from_arrays(grid, jv - drift, jl - drift, rule=LINEAR),
            "A": from_arrays(grid, spec.x0 + drift, spec.x0 + drift, rule=LINEAR),
        },
        compensator=comp,
    )
    return path, gt


def compound_poisson(spec: SimSpec):
    if spec.kind != "compound_poisson":
        raise SimulationError("spec kind mismatch")
    if spec.intensity <= 0.0:
        raise SimulationError("jump intensity must be positive")
    law = spec.jump_law or DiracLaw(1.0)
    grid, times, sizes, jv, jl = _compound_poisson_core(spec, law)
    path = from_arrays(grid, spec.x0 + jv, spec.x0 + jl, rule=PIECEWISE_CONSTANT)
    lam = spec.intensity
    drift = lam * law.mean() * grid
    gt = GroundTruth(
        kind="compound_poisson", base_dt=spec.base_dt,
        jump_times=times, jump_sizes=sizes,
        bracket=_bracket_with_jumps(grid, 0.0, times, sizes),
        decomposition={
            "M_c": _zero(grid),
            "M_d": from_arrays(grid, jv - drift, jl - drift, rule=LINEAR),
            "A": from_arrays(grid, spec.x0 + drift, spec.x0 + drift, rule=LINEAR),
        },
        compensator=CompensatorSpec.compound_poisson(lam, law),
    )
    return path, gt


def jump_diffusion(spec: SimSpec):
    """x0 + drift t + sigma W + compound Poisson, exact jump-time grid."""
    if spec.kind != "jump_diffusion":
        raise SimulationError("spec kind mismatch")
    law = spec.jump_law or DiracLaw(1.0)
    rng = _rng(spec.seed)
    times = _sample_arrivals(rng, spec.intensity, spec.T)
    sizes = law.sample(rng, times.size)
    keep = sizes != 0.0
    times, sizes = times[keep], sizes[keep]
    grid = _merge_jump_times(uniform_grid(spec.T, spec.n), times)
    w = _brownian_values(rng, grid, spec.sigma)
    jv, jl = _jump_cumsum(grid, times, sizes)
    lam = spec.intensity
    mean_jump = law.mean() if times.size or lam > 0 else 0.0
    comp_drift = lam * mean_jump * grid
    a_vals = spec.x0 + spec.drift * grid + comp_drift
    md_vals, md_left = jv - comp_drift, jl - comp_drift
    values = (spec.x0 + spec.drift * grid) + w + jv
    left = (spec.x0 + spec.drift * grid) + w + jl
    path = from_arrays(grid, values, left, rule=LINEAR)
    gt = GroundTruth(
        kind="jump_diffusion", base_dt=spec.base_dt,
        jump_times=times, jump_sizes=sizes,
        bracket=_bracket_with_jumps(grid, spec.sigma ** 2, times, sizes),
        decomposition={
            "M_c": from_arrays(grid, w, w.copy(), rule=LINEAR),
            "M_d": from_arrays(grid, md_vals, md_left, rule=LINEAR),
            "A": from_arrays(grid, a_vals, a_vals.copy(), rule=LINEAR),
        },
        compensator=(CompensatorSpec.compound_poisson(lam, law) if lam > 0 else None),
        assumes_reversible=True,
    )
    return path, gt


def fbm(spec: SimSpec):
    """Exact-covariance fractional Gaussian path via dense Cholesky.

    Covariance 0.5 (s^2H + t^2H - |t - s|^2H).  Ground truth: the bracket is
    the zero path for H > 1/2, t for H = 1/2, and divergent for H < 1/2.
    """
    if spec.kind != "fbm":
        raise SimulationError("spec kind mismatch")
    if spec.n > FBM_MAX_CELLS:
        raise SimulationError(
            f"exact-covariance sampling is limited to n <= {FBM_MAX_CELLS}")
    H = spec.hurst
    grid = uniform_grid(spec.T, spec.n)
    t = grid[1:]
    two_h = 2.0 * H
    cov = 0.5 * (t[:, None] ** two_h + t[None, :] ** two_h
                 - np.abs(t[:, None] - t[None, :]) ** two_h)
    L = np.linalg.cholesky(cov)
    z = _rng(spec.seed).standard_normal(t.size)
    values = np.concatenate(([0.0], L @ z)) * spec.sigma + spec.x0
    path = from_arrays(grid, values, values.copy(), rule=LINEAR)
    if H > 0.5:
        bracket, divergent = _zero(grid), False
    elif H == 0.5:
        bracket, divergent = from_arrays(grid, spec.sigma ** 2 * grid,
                                         spec.sigma ** 2 * grid, rule=LINEAR), False
    else:
        bracket, divergent = None, True
    gt = GroundTruth(kind="fbm", base_dt=spec.base_dt,
                     jump_times=np.zeros(0), jump_sizes=np.zeros(0),
                     bracket=bracket, bracket_divergent=divergent)
    return path, gt


def convolution_martingale(spec: SimSpec):
    """Discretized moving average X(t_i) = sum_{j<i} B(t_i - t_j) dW_j from
    two independent Brownian drivers; known bracket t^2 / 2."""
    if spec.kind != "convolution_martingale":
        raise SimulationError("spec kind mismatch")
    grid = uniform_grid(spec.T, spec.n)
    rng = _rng(spec.seed)
    dt = spec.base_dt
    dW = rng.standard_normal(spec.n) * np.sqrt(dt)
    B = np.concatenate(([0.0], np.cumsum(rng.standard_normal(spec.n) * np.sqrt(dt))))
    conv = np.convolve(B, dW)
    values = conv[: grid.size].copy()
    values[0] = 0.0
    path = from_arrays(grid, values, values.copy(), rule=LINEAR)
    gt = GroundTruth(kind="convolution_martingale", base_dt=spec.base_dt,
                     jump_times=np.zeros(0), jump_sizes=np.zeros(0),
                     bracket=from_arrays(grid, 0.5 * grid ** 2,
                                         0.5 * grid ** 2, rule=LINEAR))
    return path, gt


def _default_regimes():
    return (
        lambda t: np.sin(2.0 * np.asarray(t)),
        lambda t: 1.0 + 0.5 * np.asarray(t),
        lambda t: -0.5 + np.asarray(t) ** 2,
    )


def pdp(spec: SimSpec):
    """Piecewise deterministic path: regime functions switched at sampled
    increasing times, each switch a marked jump."""
    if spec.kind != "pdp":
        raise SimulationError("spec kind mismatch")
    regimes = spec.regimes or _default_regimes()
    rng = _rng(spec.seed)
    switches = _sample_arrivals(rng, spec.switch_rate, spec.T)
    if switches.size and np.any(np.diff(switches) <= 0.0):
        raise SimulationError("switch times must be strictly increasing")
    grid = _merge_jump_times(uniform_grid(spec.T, spec.n), switches)
    reg_idx = np.searchsorted(switches, grid, side="right")
    values = np.empty(grid.size)
    left = np.empty(grid.size)
    for k in range(int(reg_idx.max()) + 1):
        sel = reg_idx == k
        if np.any(sel):
            values[sel] = np.asarray(regimes[k % len(regimes)](grid[sel]))
    reg_idx_left = np.searchsorted(switches, grid, side="left")
    for k in range(int(reg_idx_left.max()) + 1):
        sel = reg_idx_left == k
        if np.any(sel):
            left[sel] = np.asarray(regimes[k % len(regimes)](grid[sel]))
    values = spec.x0 + values
    left = spec.x0 + left
    left[0] = values[0]
    path = from_arrays(grid, values, left, rule=LINEAR)
    gt = GroundTruth(kind="pdp", base_dt=spec.base_dt,
                     jump_times=path.jump_times, jump_sizes=path.jump_sizes,
                     regime_bounds=switches)
    return path, gt


def deterministic(spec: SimSpec):
    """Deterministic continuous path sampling spec.regimes[0] on the grid."""
    if spec.kind != "deterministic":
        raise SimulationError("spec kind mismatch")
    if not spec.regimes:
        raise SimulationError("deterministic kind needs one regime function")
    grid = uniform_grid(spec.T, spec.n)
    values = spec.x0 + np.asarray(spec.regimes[0](grid), dtype=float)
    path = from_arrays(grid, values, values.copy(), rule=LINEAR)
    gt = GroundTruth(kind="deterministic", base_dt=spec.base_dt,
                     jump_times=np.zeros(0), jump_sizes=np.zeros(0))
    return path, gt


_GENERATORS = {
    "brownian": brownian,
    "poisson": poisson,
    "compound_poisson": compound_poisson,
    "jump_diffusion": jump_diffusion,
    "fbm": fbm,
    "convolution_martingale": convolution_martingale,
    "pdp": pdp,
    "deterministic": deterministic,
}


def simulate(spec: SimSpec):
    """Dispatch on spec.kind; returns (path, ground_truth)."""
    return _GENERATORS[spec.kind](spec)


def brownian_on_grid(grid: np.ndarray, sigma: float, seed: int,
                     stream: int = 7) -> CadlagPath:
    """Standard Brownian path on an arbitrary existing grid (test batteries)."""
    w = _brownian_values(_rng(seed, stream), np.asarray(grid, dtype=float), sigma)
    return from_arrays(grid, w, w.copy(), rule=LINEAR)


# -- refinement ---------------------------------------------------------------


def refine_doubling(spec: SimSpec, path: CadlagPath, gt: GroundTruth):
    """Double the base grid reusing the coarse path's driving noise.

    Coarse grid values are kept exactly; Brownian content is filled in at
    the new points by bridge sampling from a stream derived from the seed,
    pure-jump content refines deterministically.  Returns (path, gt) on the
    doubled grid.
    """
    if spec.kind in ("poisson", "compound_poisson"):
        fine = _merge_jump_times(uniform_grid(spec.T, 2 * spec.n), gt.jump_times)
        new_path = path.refined(fine)
        gt2 = replace(gt, base_dt=spec.T / (2 * spec.n),
                      decomposition=None if gt.decomposition is None else {
                          k: p.refined(fine) for k, p in gt.decomposition.items()},
                      bracket=None if gt.bracket is None else gt.bracket.refined(fine))
        return new_path, gt2
    if spec.kind not in ("brownian", "jump_diffusion"):
        raise SimulationError(f"refinement not supported for kind {spec.kind!r}")
    fine = _merge_jump_times(uniform_grid(spec.T, 2 * spec.n), gt.jump_times)
    new_pts = np.setdiff1d(fine, path.grid)
    jv, _ = _jump_cumsum(path.grid, gt.jump_times, gt.jump_sizes)
    smooth = spec.x0 + spec.drift * path.grid
    d_old = path.values - jv - smooth
    lo = np.searchsorted(path.grid, new_pts, side="right") - 1
    a, b = path.grid[lo], path.grid[lo + 1]
    mean = d_old[lo] + (new_pts - a) / (b - a) * (d_old[lo + 1] - d_old[lo])
    var = spec.sigma ** 2 * (new_pts - a) * (b - new_pts) / (b - a)
    rng = _rng(spec.seed, stream=1)
    d_new = mean + np.sqrt(var) * rng.standard_normal(new_pts.size)
    jv_new, _ = _jump_cumsum(new_pts, gt.jump_times, gt.jump_sizes)
    vals_new = d_new + jv_new + spec.x0 + spec.drift * new_pts
    values = np.empty(fine.size)
    left = np.empty(fine.size)
    old_pos = np.searchsorted(fine, path.grid)
    new_pos = np.searchsorted(fine, new_pts)
    values[old_pos] = path.values
    values[new_pos] = vals_new
    left[old_pos] = path.left_values
    left[new_pos] = vals_new
    new_path = from_arrays(fine, values, left, rule=LINEAR)
    lam = spec.intensity if spec.kind == "jump_diffusion" else 0.0
    law = spec.jump_law or DiracLaw(1.0)
    mean_jump = law.mean() if lam > 0 else 0.0
    comp_drift = lam * mean_jump * fine
    jvf, jlf = _jump_cumsum(fine, gt.jump_times, gt.jump_sizes)
    smooth_f = spec.x0 + spec.drift * fine
    wf = new_path.values - jvf - smooth_f
    decomposition = {
        "M_c": from_arrays(fine, wf, wf.copy(), rule=LINEAR),
        "M_d": from_arrays(fine, jvf - comp_drift, jlf - comp_drift, rule=LINEAR),
        "A": from_arrays(fine, smooth_f + comp_drift, smooth_f + comp_drift,
                         rule=LINEAR),
    }
    gt2 = replace(
        gt, base_dt=spec.T / (2 * spec.n), decomposition=decomposition,
        bracket=None if gt.bracket is None else _bracket_with_jumps(
            fine, spec.sigma ** 2, gt.jump_times, gt.jump_sizes))
    return new_path, gt2

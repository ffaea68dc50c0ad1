"""Cadlag path containers with exact jump bookkeeping.

A path lives on a finite grid 0 = t_0 < ... < t_n = T, is right-continuous
with left limits, and is extended to [T, inf) by its final value.  Jumps are
first class: every discontinuity is a marked grid index whose left limit is
stored exactly.  Nothing is ever inferred from large increments.

Two interpolation rules are supported between grid points:

* ``pc``      piecewise constant, right continuous (counting processes),
* ``linear``  linear between a grid value and the next stored left limit,
              so interpolation never crosses a marked jump.

Paths are immutable after construction; all transformations return new
paths, so instances can be shared freely between concurrent tasks.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

PIECEWISE_CONSTANT = "pc"
LINEAR = "linear"

_RULES = (PIECEWISE_CONSTANT, LINEAR)


class PathError(ValueError):
    """Raised when path construction data violates an invariant."""


def _as_farray(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise PathError("expected a one dimensional array")
    return a


@dataclass(frozen=True)
class CadlagPath:
    """Right-continuous path on [0, T] with stored left limits.

    ``values[i]`` is X(t_i) and ``left_values[i]`` is X(t_i-).  The two may
    differ only at indices listed in ``jump_marks``.  Evaluation beyond the
    horizon returns X(T).
    """

    grid: np.ndarray
    values: np.ndarray
    left_values: np.ndarray
    jump_marks: np.ndarray
    rule: str = LINEAR

    def __post_init__(self):
        grid = _as_farray(self.grid)
        values = _as_farray(self.values)
        left = _as_farray(self.left_values)
        marks = np.asarray(self.jump_marks, dtype=np.intp)
        if grid.size < 2:
            raise PathError("grid needs at least two points")
        if grid[0] != 0.0:
            raise PathError("grid must start at 0")
        if grid.size != values.size or grid.size != left.size:
            raise PathError("grid, values and left_values lengths differ")
        if np.any(np.diff(grid) <= 0.0):
            raise PathError("grid must be strictly increasing")
        if marks.size:
            if marks[0] < 1 or marks[-1] >= grid.size or np.any(np.diff(marks) <= 0):
                raise PathError("jump marks must be sorted, unique indices in [1, n]")
        mask = np.zeros(grid.size, dtype=bool)
        mask[marks] = True
        jumps = values - left
        if np.any(jumps[marks] == 0.0):
            raise PathError("marked jump with zero size")
        if np.any(jumps[~mask] != 0.0):
            raise PathError("left_values differ from values at an unmarked index")
        if self.rule == PIECEWISE_CONSTANT:
            if not np.array_equal(left[1:], values[:-1]):
                raise PathError(
                    "piecewise-constant left limits are determined by the previous value"
                )
        elif self.rule != LINEAR:
            raise PathError(f"unknown interpolation rule {self.rule!r}")
        for name, arr in (("grid", grid), ("values", values),
                          ("left_values", left), ("jump_marks", marks)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # -- basic geometry -------------------------------------------------

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def n_points(self) -> int:
        return int(self.grid.size)

    @property
    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.grid)))

    @property
    def jump_times(self) -> np.ndarray:
        return self.grid[self.jump_marks]

    @property
    def jump_sizes(self) -> np.ndarray:
        return self.values[self.jump_marks] - self.left_values[self.jump_marks]

    def same_grid(self, other: "CadlagPath") -> bool:
        return self.grid.shape == other.grid.shape and np.array_equal(self.grid, other.grid)

    # -- evaluation ------------------------------------------------------

    def value_at(self, t):
        """X(t) under the interpolation rule; X(T) for t > T.  Total on t >= 0."""
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        tq = np.atleast_1d(t_arr)
        if np.any(tq < 0.0):
            raise PathError("value_at needs t >= 0")
        tc = np.minimum(tq, self.horizon)
        idx = np.searchsorted(self.grid, tc, side="right") - 1
        out = self.values[idx]
        if self.rule == LINEAR:
            exact = self.grid[idx] == tc
            if not np.all(exact):
                lo = np.minimum(idx, self.grid.size - 2)
                w = self.grid[lo + 1] - self.grid[lo]
                frac = (tc - self.grid[lo]) / w
                interp = self.values[lo] + frac * (self.left_values[lo + 1] - self.values[lo])
                out = np.where(exact, out, interp)
        out = np.asarray(out, dtype=float)
        return float(out[0]) if scalar else out

    def left_limit(self, t):
        """X(t-); at marked jumps the stored left value.  Defined for t > 0."""
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        tq = np.atleast_1d(t_arr)
        if np.any(tq <= 0.0):
            raise PathError("left limit undefined at t = 0")
        beyond = tq > self.horizon
        tc = np.minimum(tq, self.horizon)
        idx = np.searchsorted(self.grid, tc, side="left")
        hit = self.grid[np.minimum(idx, self.grid.size - 1)] == tc
        out = np.where(hit, self.left_values[np.minimum(idx, self.grid.size - 1)], 0.0)
        interior = ~hit
        if np.any(interior):
            cell = idx - 1
            if self.rule == PIECEWISE_CONSTANT:
                fill = self.values[cell]
            else:
                w = self.grid[cell + 1] - self.grid[cell]
                frac = (tc - self.grid[cell]) / w
                fill = self.values[cell] + frac * (self.left_values[cell + 1] - self.values[cell])
            out = np.where(interior, fill, out)
        out = np.where(beyond, self.values[-1], out)
        out = np.asarray(out, dtype=float)
        return float(out[0]) if scalar else out

    def jumps(self) -> list[tuple[float, float]]:
        """Marked jumps as (time, size) pairs, sorted by time."""
        return list(zip(self.jump_times.tolist(), self.jump_sizes.tolist()))

    def sum_squared_jumps(self) -> float:
        return float(np.sum(self.jump_sizes ** 2))

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.values)), np.max(np.abs(self.left_values))))

    # -- arithmetic (shared grid) ---------------------------------------

    def _combine(self, other, fn) -> "CadlagPath":
        if not self.same_grid(other):
            raise PathError("paths must share a grid")
        values = fn(self.values, other.values)
        left = fn(self.left_values, other.left_values)
        rule = LINEAR if LINEAR in (self.rule, other.rule) else PIECEWISE_CONSTANT
        return from_arrays(self.grid, values, left, rule=rule)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        c = float(scalar)
        return from_arrays(self.grid, c * self.values, c * self.left_values, rule=self.rule)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def shift_values(self, c: float) -> "CadlagPath":
        c = float(c)
        return from_arrays(self.grid, self.values + c, self.left_values + c, rule=self.rule)

    # -- refinement -------------------------------------------------------

    def refined(self, extra_times) -> "CadlagPath":
        """Insert grid points without changing the path anywhere.

        Inserted points carry the interpolated value; they are continuity
        points, so value_at and left_limit are unchanged on all of [0, T].
        """
        extra = _as_farray(extra_times)
        extra = extra[(extra > 0.0) & (extra < self.horizon)]
        extra = np.setdiff1d(extra, self.grid)
        if extra.size == 0:
            return self
        new_grid = np.union1d(self.grid, extra)
        values = self.value_at(new_grid)
        left = values.copy()
        old_pos = np.searchsorted(new_grid, self.grid)
        left[old_pos] = self.left_values
        marks = old_pos[np.isin(np.arange(self.grid.size), self.jump_marks)]
        return CadlagPath(new_grid, values, left, marks, rule=self.rule)

    # -- serialization ----------------------------------------------------

    def to_csv(self) -> str:
        """CSV with columns t,value,left_value,is_jump (bit exact round trip)."""
        mask = np.zeros(self.grid.size, dtype=int)
        mask[self.jump_marks] = 1
        buf = io.StringIO()
        buf.write(f"# rule={self.rule}\n")
        buf.write("t,value,left_value,is_jump\n")
        for t, v, l, j in zip(self.grid, self.values, self.left_values, mask):
            buf.write(f"{float(t)!r},{float(v)!r},{float(l)!r},{int(j)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, rule: str | None = None) -> "CadlagPath":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if lines and lines[0].startswith("#"):
            header = lines.pop(0)
            if rule is None and "rule=" in header:
                rule = header.split("rule=", 1)[1].strip()
        if lines and lines[0].startswith("t,"):
            lines.pop(0)
        rows = [ln.split(",") for ln in lines]
        grid = np.array([float(r[0]) for r in rows])
        values = np.array([float(r[1]) for r in rows])
        left = np.array([float(r[2]) for r in rows])
        marks = np.nonzero(np.array([int(r[3]) for r in rows]))[0]
        return cls(grid, values, left, marks, rule=rule or LINEAR)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "rule": self.rule,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "left_values": self.left_values.tolist(),
            "jump_marks": self.jump_marks.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CadlagPath":
        d = json.loads(text)
        return cls(np.array(d["grid"]), np.array(d["values"]),
                   np.array(d["left_values"]), np.array(d["jump_marks"], dtype=np.intp),
                   rule=d.get("rule", LINEAR))


# -- constructors ----------------------------------------------------------


def make_path(grid, values, jumps=(), rule: str = LINEAR) -> CadlagPath:
    """Build a validated path from grid values and an explicit jump list.

    ``jumps`` is a sequence of (index, left_value) pairs.  Under the pc rule
    left limits are always the previous grid value, so a supplied left_value
    must agree with it; under the linear rule the left_value is the endpoint
    of the incoming segment.
    """
    grid = _as_farray(grid)
    values = _as_farray(values)
    jumps = list(jumps)
    if grid.size != values.size:
        raise PathError("grid and values lengths differ")
    if rule == PIECEWISE_CONSTANT:
        left = np.empty_like(values)
        left[0] = values[0]
        left[1:] = values[:-1]
    else:
        left = values.copy()
    marks = []
    for idx, left_value in jumps:
        i = int(idx)
        if i < 1 or i >= grid.size:
            raise PathError(f"jump index {i} outside (0, n]")
        if rule == PIECEWISE_CONSTANT and float(left_value) != values[i - 1]:
            raise PathError("pc jump left_value must equal the previous grid value")
        left[i] = float(left_value)
        marks.append(i)
    marks = np.array(sorted(set(marks)), dtype=np.intp)
    if len(marks) != len(jumps):
        raise PathError("duplicate jump indices")
    return CadlagPath(grid, values, left, marks, rule=rule)


def from_arrays(grid, values, left_values, rule: str = LINEAR) -> CadlagPath:
    """Path from raw arrays; jump marks are the indices where values != left."""
    values = _as_farray(values)
    left = _as_farray(left_values)
    marks = np.nonzero(values != left)[0]
    marks = marks[marks >= 1]
    left = left.copy()
    left[0] = values[0]
    return CadlagPath(np.asarray(grid, dtype=float), values, left, marks, rule=rule)


def constant_path(grid, c: float = 0.0, rule: str = LINEAR) -> CadlagPath:
    grid = _as_farray(grid)
    v = np.full(grid.size, float(c))
    return CadlagPath(grid, v, v.copy(), np.array([], dtype=np.intp), rule=rule)


def from_function(grid, fn, rule: str = LINEAR) -> CadlagPath:
    """Continuous path sampling a scalar function of time on the grid."""
    grid = _as_farray(grid)
    v = np.asarray(fn(grid), dtype=float)
    return from_arrays(grid, v, v.copy(), rule=rule)


def step_path(T: float, n: int, step_time: float, height: float = 1.0,
              base: float = 0.0) -> CadlagPath:
    """Single step of the given height at step_time, on a uniform base grid."""
    grid = np.linspace(0.0, T, n + 1)
    if step_time <= 0.0 or step_time >= T:
        raise PathError("step_time must lie in (0, T)")
    grid = np.union1d(grid, [step_time])
    values = np.where(grid >= step_time, base + height, base)
    left = np.where(grid > step_time, base + height, base)
    return from_arrays(grid, values, left, rule=PIECEWISE_CONSTANT)


def uniform_grid(T: float, n: int) -> np.ndarray:
    if n < 2:
        raise PathError("need at least two grid cells")
    return np.linspace(0.0, float(T), int(n) + 1)


def sup_diff(p: CadlagPath, q: CadlagPath) -> float:
    """Sup over grid times (including left limits) of |p - q|."""
    if not p.same_grid(q):
        raise PathError("paths must share a grid")
    return float(max(np.max(np.abs(p.values - q.values)),
                     np.max(np.abs(p.left_values - q.left_values))))


# free-function spellings of the core path queries


def value_at(p: CadlagPath, t):
    return p.value_at(t)


def left_limit(p: CadlagPath, t):
    return p.left_limit(t)


def jumps_of(p: CadlagPath) -> list[tuple[float, float]]:
    return p.jumps()


def sum_squared_jumps(p: CadlagPath) -> float:
    return p.sum_squared_jumps()

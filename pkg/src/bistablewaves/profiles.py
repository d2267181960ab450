"""Grids, state-valued profiles, the order structure, and monotone-limit utilities.

A Profile is a sampled function from a 1-D habitat grid to state vectors,
piecewise-linear between samples and constantly extended by its limits
beyond the sampled range.  All translation/rescaling goes through linear
interpolation, which preserves ordering and monotonicity exactly.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "Grid",
    "Profile",
    "OrderRelation",
    "ProfileError",
    "heaviside_profile",
    "constant_profile",
    "translate",
    "rescale",
    "compare",
    "level_crossing",
    "helly_extract",
    "profile_to_bytes",
    "profile_from_bytes",
    "profile_to_csv",
    "profile_from_csv",
]

DEFAULT_ORDER_TOL = 1e-10

# Tail fraction and oscillation tolerance for Cauchy detection in
# helly_extract; the underlying convergence has no rate, so a fixed
# empirical window with flagging is used.
HELLY_WINDOW_FRACTION = 0.25
HELLY_OSCILLATION_TOL = 1e-6


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform habitat grid; lattice habitats force unit spacing."""

    x_min: float
    x_max: float
    n_points: int
    habitat_kind: str = "continuous-sampled"

    def __post_init__(self):
        if self.n_points < 2:
            raise ProfileError("grid needs at least 2 points")
        if not self.x_max > self.x_min:
            raise ProfileError("grid needs x_max > x_min")
        if self.habitat_kind not in ("continuous-sampled", "lattice"):
            raise ProfileError(f"unknown habitat_kind {self.habitat_kind!r}")
        if self.habitat_kind == "lattice":
            if abs(self.dx - 1.0) > 1e-12:
                raise ProfileError("lattice habitat forces dx = 1")
            if abs(self.x_min - round(self.x_min)) > 1e-12:
                raise ProfileError("lattice habitat needs integer-aligned x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @classmethod
    def regular(cls, x_min: float, x_max: float, dx: float,
                habitat_kind: str = "continuous-sampled") -> "Grid":
        n = int(round((x_max - x_min) / dx)) + 1
        return cls(x_min, x_min + (n - 1) * dx, n, habitat_kind)

    @classmethod
    def lattice(cls, x_min: int, x_max: int) -> "Grid":
        return cls(float(x_min), float(x_max), int(x_max - x_min) + 1, "lattice")


def _as_state(v, like=None) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if like is not None and a.shape != like.shape:
        a = np.broadcast_to(a, like.shape).copy()
    return a


@dataclass(frozen=True)
class Profile:
    """Sampled state-valued function with constant extension by its limits."""

    grid: Grid
    values: np.ndarray              # (n_points, *state_shape)
    left_limit: np.ndarray          # state_shape
    right_limit: np.ndarray
    monotone_flag: bool | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        object.__setattr__(self, "values", vals)
        if vals.shape[0] != self.grid.n_points:
            raise ProfileError(
                f"values length {vals.shape[0]} != grid n_points {self.grid.n_points}")
        object.__setattr__(self, "left_limit", _as_state(self.left_limit, vals[0]))
        object.__setattr__(self, "right_limit", _as_state(self.right_limit, vals[0]))
        if self.left_limit.shape != vals.shape[1:] or self.right_limit.shape != vals.shape[1:]:
            raise ProfileError("limit shape does not match state shape")
        if self.monotone_flag:
            v = self.monotonicity_violation()
            if v > 1e-9:
                raise ProfileError(f"monotone_flag set but violation {v:.3e}")

    @property
    def state_shape(self) -> tuple:
        return self.values.shape[1:]

    def monotonicity_violation(self) -> float:
        v = float(np.max(self.values[:-1] - self.values[1:], initial=0.0))
        v = max(v, float(np.max(self.left_limit - self.values[0], initial=0.0)))
        v = max(v, float(np.max(self.values[-1] - self.right_limit, initial=0.0)))
        return max(v, 0.0)

    def is_monotone(self, tol: float = 1e-10) -> bool:
        return self.monotonicity_violation() <= tol

    def sample(self, xq) -> np.ndarray:
        """Piecewise-linear evaluation at arbitrary positions, limit-extended."""
        xq = np.asarray(xq, dtype=float)
        x = self.grid.x
        flat = self.values.reshape(self.n_points_, -1)
        out = np.empty(xq.shape + (flat.shape[1],))
        for j in range(flat.shape[1]):
            out[..., j] = np.interp(xq, x, flat[:, j],
                                    left=self.left_limit.ravel()[j],
                                    right=self.right_limit.ravel()[j])
        return out.reshape(xq.shape + self.state_shape)

    @property
    def n_points_(self) -> int:
        return self.values.shape[0]

    def with_values(self, values, monotone_flag=None,
                    left_limit=None, right_limit=None) -> "Profile":
        return Profile(
            self.grid, np.asarray(values, dtype=float),
            self.left_limit if left_limit is None else left_limit,
            self.right_limit if right_limit is None else right_limit,
            monotone_flag,
        )


@dataclass(frozen=True)
class OrderRelation:
    verdict: str                    # leq | geq | equal | unordered
    max_violation: float


def constant_profile(grid: Grid, value) -> Profile:
    v = np.atleast_1d(np.asarray(value, dtype=float))
    vals = np.broadcast_to(v, (grid.n_points,) + v.shape).copy()
    return Profile(grid, vals, v, v, monotone_flag=True)


def heaviside_profile(grid: Grid, lower, upper, interface: float,
                      ramp_width: float) -> Profile:
    """Nondecreasing ramp: lower for x <= interface - ramp_width, upper for x >= interface."""
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    up = np.atleast_1d(np.asarray(upper, dtype=float))
    if lo.shape != up.shape:
        raise ProfileError("lower/upper state shapes differ")
    if np.any(lo > up + 1e-15):
        raise ProfileError("ill-posed connecting data: lower must be <= upper componentwise")
    if not (grid.x_min <= interface <= grid.x_max):
        raise ProfileError("interface outside the grid")
    if ramp_width < 0:
        raise ProfileError("ramp_width must be >= 0")
    x = grid.x
    if ramp_width == 0:
        theta = (x >= interface).astype(float)
    else:
        theta = np.clip((x - (interface - ramp_width)) / ramp_width, 0.0, 1.0)
    vals = lo[None, :] + theta[:, None] * (up - lo)[None, :]
    vals = vals.reshape((grid.n_points,) + lo.shape)
    return Profile(grid, vals, lo, up, monotone_flag=True)


def _aligned_shift(y: float, dx: float) -> int | None:
    k = round(y / dx)
    if abs(y - k * dx) <= 1e-12 * max(dx, 1.0):
        return int(k)
    return None


def translate(p: Profile, y: float) -> Profile:
    """T_y[p](x) = p(x - y); exact index roll for grid-aligned shifts."""
    k = _aligned_shift(y, p.grid.dx)
    if k is not None:
        n = p.n_points_
        vals = np.empty_like(p.values)
        if k >= 0:
            vals[:min(k, n)] = p.left_limit
            if k < n:
                vals[k:] = p.values[:n - k]
        else:
            m = -k
            vals[max(n - m, 0):] = p.right_limit
            if m < n:
                vals[:n - m] = p.values[m:]
        return Profile(p.grid, vals, p.left_limit, p.right_limit, p.monotone_flag)
    vals = p.sample(p.grid.x - y)
    return Profile(p.grid, vals, p.left_limit, p.right_limit, p.monotone_flag)


def rescale(p: Profile, xi: float) -> Profile:
    """A_xi[p](x) = p(xi * x); the construction only uses xi >= 1."""
    if xi < 1.0:
        raise ProfileError("rescale requires xi >= 1")
    if xi == 1.0:
        return p
    vals = p.sample(xi * p.grid.x)
    return Profile(p.grid, vals, p.left_limit, p.right_limit, p.monotone_flag)


def compare(p: Profile, q: Profile, tol: float = DEFAULT_ORDER_TOL) -> OrderRelation:
    """Componentwise order verdict of p against q on a common grid."""
    if p.grid != q.grid:
        raise ProfileError("compare needs a common grid")
    if p.state_shape != q.state_shape:
        raise ProfileError("compare needs matching state shapes")
    d = p.values - q.values
    over = float(np.max(d, initial=-np.inf))          # how far p exceeds q
    under = float(np.max(-d, initial=-np.inf))        # how far q exceeds p
    over = max(over, float(np.max(p.left_limit - q.left_limit)),
               float(np.max(p.right_limit - q.right_limit)))
    under = max(under, float(np.max(q.left_limit - p.left_limit)),
                float(np.max(q.right_limit - p.right_limit)))
    over = max(over, 0.0)
    under = max(under, 0.0)
    is_leq = over <= tol
    is_geq = under <= tol
    if is_leq and is_geq:
        return OrderRelation("equal", 0.0 if max(over, under) == 0.0 else max(over, under))
    if is_leq:
        return OrderRelation("leq", over)
    if is_geq:
        return OrderRelation("geq", under)
    return OrderRelation("unordered", min(over, under))


def _in_box(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    flat = values.reshape(values.shape[0], -1)
    return np.all((flat >= lo.ravel() - 1e-15) & (flat <= hi.ravel() + 1e-15), axis=1)


def level_crossing(p: Profile, direction: str, box) -> float:
    """Front position against an order-interval box on a monotone profile.

    direction 'a' returns sup{x : p(x) in box} (box hugging the lower state),
    direction 'b' returns inf{x : p(x) in box} (box hugging the upper state),
    refined by linear interpolation between the bracketing samples.
    Returns -inf/+inf sentinels when the box is never entered / always occupied.
    """
    if direction not in ("a", "b"):
        raise ProfileError("direction must be 'a' or 'b'")
    if not p.is_monotone(1e-9):
        raise ProfileError("level_crossing needs a monotone profile")
    lo = _as_state(box[0], p.left_limit)
    hi = _as_state(box[1], p.left_limit)
    inside = _in_box(p.values, lo, hi)
    x = p.grid.x
    dx = p.grid.dx
    if direction == "a":
        if inside.all() and np.all(p.right_limit <= hi + 1e-15):
            return np.inf
        if not inside.any():
            return -np.inf if not np.all(p.left_limit <= hi + 1e-15) else x[0]
        i = int(np.max(np.nonzero(inside)[0]))
        if i == p.n_points_ - 1:
            return x[-1]
        # leave-fraction: first component to exceed its upper bound
        v0 = p.values[i].ravel()
        v1 = p.values[i + 1].ravel()
        ts = []
        for j in range(v0.size):
            if v1[j] > hi.ravel()[j] + 1e-15 and v1[j] > v0[j]:
                ts.append((hi.ravel()[j] - v0[j]) / (v1[j] - v0[j]))
        t = min([t for t in ts if t >= 0.0], default=0.0)
        return float(x[i] + np.clip(t, 0.0, 1.0) * dx)
    else:
        if inside.all() and np.all(p.left_limit >= lo - 1e-15):
            return -np.inf
        if not inside.any():
            return np.inf if not np.all(p.right_limit >= lo - 1e-15) else x[-1]
        i = int(np.min(np.nonzero(inside)[0]))
        if i == 0:
            return x[0]
        v0 = p.values[i - 1].ravel()
        v1 = p.values[i].ravel()
        ts = []
        for j in range(v0.size):
            if v0[j] < lo.ravel()[j] - 1e-15 and v1[j] > v0[j]:
                ts.append((lo.ravel()[j] - v0[j]) / (v1[j] - v0[j]))
        t = max([t for t in ts if t <= 1.0], default=1.0)
        return float(x[i - 1] + np.clip(t, 0.0, 1.0) * dx)


def helly_extract(samples: Sequence[Profile], dense_positions,
                  tol: float = HELLY_OSCILLATION_TOL):
    """Pointwise limit of a bounded monotone profile sequence with flagging.

    Cauchy detection looks at the tail window (last quarter) of the sequence
    at each dense position; positions where the tail still oscillates beyond
    `tol` are flagged (the numerical analogue of the countable exceptional
    set) and filled by the left-limit of the limit function.

    Returns (limit Profile on the dense-position grid, converged_mask).
    """
    samples = list(samples)
    if not samples:
        raise ProfileError("helly_extract needs a nonempty sequence")
    for s in samples:
        if not s.is_monotone(1e-9):
            raise ProfileError("helly_extract needs monotone members")
    pos = np.asarray(dense_positions, dtype=float)
    if pos.ndim != 1 or pos.size < 2 or np.any(np.diff(pos) <= 0):
        raise ProfileError("dense_positions must be sorted and strictly increasing")
    spacing = np.diff(pos)
    if np.max(np.abs(spacing - spacing[0])) > 1e-9 * max(abs(pos[-1] - pos[0]), 1.0):
        raise ProfileError("dense_positions must be uniformly spaced")
    m = len(samples)
    w = max(2, int(np.ceil(HELLY_WINDOW_FRACTION * m)))
    tail = samples[m - w:]
    evals = np.stack([s.sample(pos) for s in tail])      # (w, n_pos, *state)
    osc = np.max(evals, axis=0) - np.min(evals, axis=0)
    flat_osc = osc.reshape(pos.size, -1)
    converged = np.all(flat_osc <= tol, axis=1)
    limit_vals = evals[-1].copy()
    left_tail = np.stack([s.left_limit for s in tail])
    right_tail = np.stack([s.right_limit for s in tail])
    left_lim = left_tail[-1]
    right_lim = right_tail[-1]
    # fill flagged positions by the left-limit of the limit function
    for i in range(pos.size):
        if not converged[i]:
            j = i - 1
            while j >= 0 and not converged[j]:
                j -= 1
            limit_vals[i] = limit_vals[j] if j >= 0 else left_lim
    grid = Grid(float(pos[0]), float(pos[-1]), pos.size,
                samples[0].grid.habitat_kind if abs(spacing[0] - 1.0) < 1e-12 else "continuous-sampled")
    limit = Profile(grid, limit_vals, left_lim, right_lim,
                    monotone_flag=None)
    return limit, converged


# --- serialization -----------------------------------------------------------

_MAGIC = b"BWPROF01"
_KINDS = {"continuous-sampled": 0, "lattice": 1}
_KINDS_INV = {v: k for k, v in _KINDS.items()}


def profile_to_bytes(p: Profile) -> bytes:
    """Compact binary snapshot; round-trips bit-exactly."""
    shape = p.state_shape
    head = struct.pack(
        "<8sBBq d d q", _MAGIC, _KINDS[p.grid.habitat_kind],
        {None: 2, False: 0, True: 1}[p.monotone_flag],
        len(shape), p.grid.x_min, p.grid.x_max, p.grid.n_points)
    dims = struct.pack(f"<{max(len(shape), 1)}q", *(shape or (1,)))
    body = (p.left_limit.astype("<f8").tobytes()
            + p.right_limit.astype("<f8").tobytes()
            + np.ascontiguousarray(p.values, dtype="<f8").tobytes())
    return head + dims + body


def profile_from_bytes(buf: bytes) -> Profile:
    off = struct.calcsize("<8sBBq d d q")
    magic, kind, mono, ndim, x_min, x_max, n = struct.unpack("<8sBBq d d q", buf[:off])
    if magic != _MAGIC:
        raise ProfileError("bad profile snapshot header")
    nd = max(ndim, 1)
    shape = struct.unpack(f"<{nd}q", buf[off:off + 8 * nd])
    off += 8 * nd
    shape = tuple(shape[:ndim]) if ndim else (1,)
    sz = int(np.prod(shape))
    lim_bytes = 8 * sz
    left = np.frombuffer(buf[off:off + lim_bytes], dtype="<f8").reshape(shape)
    off += lim_bytes
    right = np.frombuffer(buf[off:off + lim_bytes], dtype="<f8").reshape(shape)
    off += lim_bytes
    vals = np.frombuffer(buf[off:off + 8 * n * sz], dtype="<f8").reshape((n,) + shape)
    grid = Grid(x_min, x_max, n, _KINDS_INV[kind])
    return Profile(grid, vals.copy(), left.copy(), right.copy(),
                   {0: False, 1: True, 2: None}[mono])


def profile_to_csv(p: Profile) -> str:
    """CSV with header columns x, component_0, ... (x in space units)."""
    flat = p.values.reshape(p.n_points_, -1)
    cols = ",".join(f"component_{j}" for j in range(flat.shape[1]))
    lines = [f"x,{cols}"]
    for xi, row in zip(p.grid.x, flat):
        lines.append(f"{xi:.17g}," + ",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def profile_from_csv(text: str, left_limit=None, right_limit=None,
                     habitat_kind: str = "continuous-sampled") -> Profile:
    rows = [r for r in text.strip().splitlines() if r]
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    x, vals = data[:, 0], data[:, 1:]
    grid = Grid(float(x[0]), float(x[-1]), len(x), habitat_kind)
    lo = vals[0] if left_limit is None else np.asarray(left_limit, dtype=float)
    hi = vals[-1] if right_limit is None else np.asarray(right_limit, dtype=float)
    return Profile(grid, vals, lo, hi)

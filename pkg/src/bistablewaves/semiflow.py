"""Comparison-principle-preserving time steppers for the four system families.

The default scheme is explicit Euler with flux-form variable-coefficient
diffusion and upwind advection; it is monotone by construction under the
step-size gates checked at Semiflow construction.  The IMEX variant solves
diffusion (and, for cylinder systems, upwind advection) implicitly through
tridiagonal M-matrix systems, so the comparison principle survives while
only the reaction Lipschitz gate remains.

Ghost values beyond the grid are clamped to the profile limits; the limits
themselves evolve under the spatially homogeneous dynamics, which keeps
connecting orbits consistent with their far-field states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .kinetics import Kinetics, KineticsError
from .profiles import Grid, Profile, level_crossing, translate

__all__ = [
    "Semiflow",
    "DelayState",
    "SemiflowError",
    "step",
    "evolve",
    "poincare_map",
    "audit_axioms",
    "FrontTracker",
    "BoxMonitor",
    "SnapshotRecorder",
    "random_monotone_profile",
    "random_bump",
]


class SemiflowError(RuntimeError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class DelayState:
    """History ring covering [t - tau, t]; ring[-1] is the current slice."""

    ring: tuple

    def __post_init__(self):
        if not self.ring:
            raise SemiflowError("delay ring must be nonempty")

    @property
    def current(self) -> Profile:
        return self.ring[-1]

    @property
    def delayed(self) -> Profile:
        return self.ring[0]

    @classmethod
    def constant_history(cls, p: Profile, n_slots: int) -> "DelayState":
        return cls(tuple([p] * n_slots))


def _sample_lipschitz(k: Kinetics, n_samples: int = 50, seed: int = 12345) -> float:
    rng = np.random.default_rng(seed)
    lo, hi = k.bottom_state, k.top_state
    omega = k.time_period or 1.0
    L = 0.0
    for _ in range(n_samples):
        u = lo + rng.random(k.n_species) * (hi - lo)
        t = rng.random() * omega
        J = np.atleast_2d(k.homogeneous_jacobian(t, u))
        L = max(L, float(np.max(np.sum(np.abs(J), axis=1))))
    return L


@dataclass
class Semiflow:
    """One-step map Q_dt for a kinetics on a grid, plus its step-size audit."""

    kinetics: Kinetics
    grid: Grid
    dt: float | None = None
    scheme: str = "explicit_euler"          # or imex_diffusion_implicit
    safety: float = 0.75
    t_unit: float | None = None             # horizon unit that dt must divide

    def __post_init__(self):
        k = self.kinetics
        g = self.grid
        if self.scheme not in ("explicit_euler", "imex_diffusion_implicit"):
            raise SemiflowError(f"unknown scheme {self.scheme!r}")
        dx = g.dx
        self.L_f = _sample_lipschitz(k)
        max_d = float(np.max(k.diffusion)) if k.diffusion is not None else 1.0
        self._E = None
        self._y = None
        if k.family == "periodic_diffusion":
            xs = g.x
            self._d_right = np.asarray(k.diffusion_fn(xs + dx / 2), dtype=float)
            self._d_left = np.empty_like(self._d_right)
            self._d_left[1:] = self._d_right[:-1]
            self._d_left[0] = float(k.diffusion_fn(xs[0] - dx / 2))
            max_d = float(max(self._d_right.max(), self._d_left.max()))
            if min(self._d_right.min(), self._d_left.min()) <= 0:
                raise SemiflowError("diffusion coefficient must stay positive")
        if k.family == "cylinder":
            if k.cross_section is None or k.cross_diffusion is None:
                raise SemiflowError("cylinder family needs cross_section and cross_diffusion")
            y0, y1, ny = k.cross_section
            self._y = np.linspace(y0, y1, ny)
            self._dy = self._y[1] - self._y[0] if ny > 1 else 1.0
            E = k.advection(self._y) if k.advection is not None else np.zeros(ny)
            E = np.asarray(E, dtype=float)
            if E.ndim == 1:
                E = np.broadcast_to(E, (k.n_species, ny)).copy()
            self._E = E                      # (n_species, n_cross)
        if k.family == "nonlocal_delayed":
            if k.kernel is None or k.birth is None or k.decay is None:
                raise SemiflowError("nonlocal family needs kernel, birth, decay")
            m = int(math.ceil(k.kernel.support / dx))
            zs = np.arange(-m, m + 1) * dx
            w = np.asarray(k.kernel.fn(zs), dtype=float) * dx
            total = w.sum()
            if not (abs(total - 1.0) < 0.2):
                raise SemiflowError("kernel discretization lost too much mass")
            self._kernel_w = w / total       # renormalized: equilibria stay fixed
            self._kernel_halfwidth = m

        # step-size gates (the monotonicity conditions)
        budget_adv = 0.0
        budget_y = 0.0
        if k.family == "cylinder":
            budget_y = 2.0 * float(np.max(k.cross_diffusion)) / self._dy ** 2
            budget_adv = float(np.max(np.abs(self._E))) / dx
        diff_budget = 2.0 * max_d / dx ** 2
        if self.scheme == "explicit_euler":
            full = diff_budget + budget_y + budget_adv + self.L_f
        else:
            full = self.L_f
        if self.dt is None:
            dt_max = self.safety / full if full > 0 else 1.0
            unit = self.t_unit or k.time_period or 1.0
            n_sub = max(1, int(math.ceil(unit / dt_max)))
            self.dt = unit / n_sub
        if self.scheme == "explicit_euler" and self.dt > dx * dx / (2.0 * max_d) + 1e-15:
            raise SemiflowError(
                f"CFL violation: dt={self.dt:.3g} exceeds dx^2/(2 max d)={dx * dx / (2 * max_d):.3g}")
        if self.dt * self.L_f > 1.0 + 1e-12:
            raise SemiflowError(
                f"reaction gate violation: dt*L_f = {self.dt * self.L_f:.3g} > 1")
        if self.scheme == "explicit_euler" and self.dt * full > 1.0 + 1e-12:
            raise SemiflowError(
                f"monotonicity budget violation: dt*(diffusion+advection+reaction) = {self.dt * full:.3g} > 1")
        self._max_d = max_d
        if k.family == "nonlocal_delayed":
            tau = k.delay or 0.0
            m = int(round(tau / self.dt))
            if abs(m * self.dt - tau) > 1e-9 * max(tau, 1.0):
                # choose dt so the ring lands exactly on tau
                if tau > 0:
                    m = max(1, int(math.ceil(tau / self.dt)))
                    self.dt = tau / m
            self.ring_len = m + 1
        if k.time_period is not None:
            ratio = k.time_period / self.dt
            if abs(ratio - round(ratio)) > 1e-9:
                raise SemiflowError("dt must divide the time period")

    # --- raw-array one-step kernels ------------------------------------------

    def _xlap(self, v, lo, hi):
        out = np.empty_like(v)
        out[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
        out[0] = v[1] - 2.0 * v[0] + lo
        out[-1] = hi - 2.0 * v[-1] + v[-2]
        return out

    def _react(self, t_mid, v):
        k = self.kinetics
        if k.family == "cylinder":
            # f acts on the species axis; v is (n_x, n_species, n_cross)
            vt = np.moveaxis(v, 1, -1)
            out = np.asarray(k.reaction(t_mid, vt), dtype=float)
            return np.moveaxis(out, -1, 1)
        return np.asarray(k.reaction(t_mid, v), dtype=float)

    def _react_state(self, t_mid, u):
        k = self.kinetics
        if k.family == "cylinder":
            ut = np.moveaxis(np.asarray(u, float)[None, ...], 1, -1)
            out = np.asarray(k.reaction(t_mid, ut), dtype=float)
            return np.moveaxis(out, -1, 1)[0]
        return np.asarray(k.reaction(t_mid, u), dtype=float)

    def _step_rd(self, v, lo, hi, t):
        k = self.kinetics
        dt, dx = self.dt, self.grid.dx
        t_mid = t + dt / 2
        A = k.diffusion[None, :]
        lap = self._xlap(v, lo, hi)
        if self.scheme == "explicit_euler":
            v2 = v + dt * (A * lap / dx ** 2 + self._react(t_mid, v))
        else:
            rhs = v + dt * self._react(t_mid, v)
            v2 = np.empty_like(v)
            lo2 = lo + dt * self._react_state(t_mid, lo)
            hi2 = hi + dt * self._react_state(t_mid, hi)
            for s in range(k.n_species):
                v2[:, s] = self._implicit_x(rhs[:, s], k.diffusion[s], 0.0,
                                            lo2[s], hi2[s])
            return v2, lo2, hi2
        lo2 = lo + dt * self._react_state(t_mid, lo)
        hi2 = hi + dt * self._react_state(t_mid, hi)
        return v2, lo2, hi2

    def _step_periodic_diffusion(self, v, lo, hi, t):
        dt, dx = self.dt, self.grid.dx
        t_mid = t + dt / 2
        dr = self._d_right[:, None]
        dl = self._d_left[:, None]
        up = np.vstack([v[1:], hi[None, :]])
        dn = np.vstack([lo[None, :], v[:-1]])
        if self.scheme == "explicit_euler":
            flux = dr * (up - v) - dl * (v - dn)
            v2 = v + dt * (flux / dx ** 2 + self._react(t_mid, v))
        else:
            rhs = v + dt * self._react(t_mid, v)
            lo2 = lo + dt * self._react_state(t_mid, lo)
            hi2 = hi + dt * self._react_state(t_mid, hi)
            v2 = np.empty_like(v)
            for s in range(v.shape[1]):
                v2[:, s] = self._implicit_flux(rhs[:, s], lo2[s], hi2[s])
            return v2, lo2, hi2
        lo2 = lo + dt * self._react_state(t_mid, lo)
        hi2 = hi + dt * self._react_state(t_mid, hi)
        return v2, lo2, hi2

    def _ylap(self, v):
        # Neumann second differences along the cross-section axis
        out = np.empty_like(v)
        out[..., 1:-1] = v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]
        out[..., 0] = v[..., 1] - v[..., 0]
        out[..., -1] = v[..., -2] - v[..., -1]
        return out

    def _step_cylinder(self, v, lo, hi, t):
        k = self.kinetics
        dt, dx = self.dt, self.grid.dx
        t_mid = t + dt / 2
        A = k.diffusion[None, :, None]
        B = np.asarray(k.cross_diffusion, dtype=float)[None, :, None]
        E = self._E[None, :, :]              # (1, n_species, n_cross)
        lapx = self._xlap(v, lo, hi)
        lapy = self._ylap(v)
        up = np.concatenate([v[1:], hi[None]], axis=0)
        dn = np.concatenate([lo[None], v[:-1]], axis=0)
        adv = np.where(E > 0, E * (up - v), E * (v - dn)) / dx
        if self.scheme == "explicit_euler":
            v2 = v + dt * (A * lapx / dx ** 2 + B * lapy / self._dy ** 2
                           + adv + self._react(t_mid, v))
            By = np.asarray(k.cross_diffusion, dtype=float)[:, None]
            lo2 = lo + dt * (By * self._ylap(lo) / self._dy ** 2
                             + self._react_state(t_mid, lo))
            hi2 = hi + dt * (By * self._ylap(hi) / self._dy ** 2
                             + self._react_state(t_mid, hi))
            return v2, lo2, hi2
        # IMEX: explicit reaction, implicit x (diffusion + upwind advection),
        # then implicit y diffusion; each solve is an M-matrix system.
        rhs = v + dt * self._react(t_mid, v)
        lo_r = lo + dt * self._react_state(t_mid, lo)
        hi_r = hi + dt * self._react_state(t_mid, hi)
        By = np.asarray(k.cross_diffusion, dtype=float)
        lo2 = np.empty_like(lo_r)
        hi2 = np.empty_like(hi_r)
        v2 = np.empty_like(rhs)
        for s in range(k.n_species):
            lo2[s] = self._implicit_y(lo_r[s][None, :], By[s])[0]
            hi2[s] = self._implicit_y(hi_r[s][None, :], By[s])[0]
            for j in range(v.shape[2]):
                v2[:, s, j] = self._implicit_x(rhs[:, s, j], k.diffusion[s],
                                               self._E[s, j], lo2[s, j], hi2[s, j])
            v2[:, s, :] = self._implicit_y(v2[:, s, :], By[s])
        return v2, lo2, hi2

    def _step_nonlocal(self, ring, lows, highs, t):
        k = self.kinetics
        dt, dx = self.dt, self.grid.dx
        v, lo, hi = ring[-1], lows[-1], highs[-1]
        vd, lod, hid = ring[0], lows[0], highs[0]
        m = self._kernel_halfwidth
        b = np.asarray(k.birth(vd), dtype=float)
        blo = np.asarray(k.birth(lod), dtype=float)
        bhi = np.asarray(k.birth(hid), dtype=float)
        conv = np.empty_like(b)
        for s in range(v.shape[1]):
            padded = np.concatenate([np.full(m, blo[s]), b[:, s], np.full(m, bhi[s])])
            conv[:, s] = np.convolve(padded, self._kernel_w, mode="valid")
        lap = self._xlap(v, lo, hi)
        A = k.diffusion[None, :]
        growth = -k.decay * v + conv
        if self.scheme == "explicit_euler":
            v2 = v + dt * (A * lap / dx ** 2 + growth)
        else:
            rhs = v + dt * growth
            v2 = np.empty_like(v)
            lo2 = lo + dt * (-k.decay * lo + blo)
            hi2 = hi + dt * (-k.decay * hi + bhi)
            for s in range(v.shape[1]):
                v2[:, s] = self._implicit_x(rhs[:, s], k.diffusion[s], 0.0,
                                            lo2[s], hi2[s])
            return v2, lo2, hi2
        lo2 = lo + dt * (-k.decay * lo + blo)
        hi2 = hi + dt * (-k.decay * hi + bhi)
        return v2, lo2, hi2

    def _implicit_x(self, rhs, d, E, lo, hi):
        """(I - dt (d dxx + E dx upwind)) v = rhs with clamped ghosts."""
        n = rhs.size
        dt, dx = self.dt, self.grid.dx
        nu = dt * d / dx ** 2
        ap = dt * max(E, 0.0) / dx
        am = dt * max(-E, 0.0) / dx
        diag = np.full(n, 1.0 + 2.0 * nu + ap + am)
        upper = np.full(n, -(nu + ap))
        lower = np.full(n, -(nu + am))
        r = rhs.astype(float).copy()
        r[0] += (nu + am) * lo
        r[-1] += (nu + ap) * hi
        ab = np.zeros((3, n))
        ab[0, 1:] = upper[:-1]
        ab[1, :] = diag
        ab[2, :-1] = lower[1:]
        return solve_banded((1, 1), ab, r)

    def _implicit_flux(self, rhs, lo, hi):
        n = rhs.size
        dt, dx = self.dt, self.grid.dx
        nur = dt * self._d_right / dx ** 2
        nul = dt * self._d_left / dx ** 2
        diag = 1.0 + nur + nul
        r = rhs.astype(float).copy()
        r[0] += nul[0] * lo
        r[-1] += nur[-1] * hi
        ab = np.zeros((3, n))
        ab[0, 1:] = -nur[:-1]
        ab[1, :] = diag
        ab[2, :-1] = -nul[1:]
        return solve_banded((1, 1), ab, r)

    def _implicit_y(self, block, By):
        """(I - dt B lap_y) along the last axis with Neumann ends."""
        n = block.shape[-1]
        if n == 1:
            return block.copy()
        nu = self.dt * By / self._dy ** 2
        diag = np.full(n, 1.0 + 2.0 * nu)
        diag[0] = diag[-1] = 1.0 + nu
        ab = np.zeros((3, n))
        ab[0, 1:] = -nu
        ab[1, :] = diag
        ab[2, :-1] = -nu
        return solve_banded((1, 1), ab, block.T).T


def _unwrap(p: Profile):
    return p.values.copy(), p.left_limit.copy(), p.right_limit.copy()


def _check_finite(v, s, t):
    if not np.all(np.isfinite(v)):
        raise SemiflowError(f"non-finite state at t={t:.6g}; aborting", state=v)


def step(s: Semiflow, state, t_now: float = 0.0):
    """Advance one dt; accepts a Profile or, for delayed systems, a DelayState."""
    k = s.kinetics
    if k.family == "nonlocal_delayed":
        if isinstance(state, Profile):
            state = DelayState.constant_history(state, s.ring_len)
        ring = [p.values for p in state.ring]
        lows = [p.left_limit for p in state.ring]
        highs = [p.right_limit for p in state.ring]
        v2, lo2, hi2 = s._step_nonlocal(ring, lows, highs, t_now)
        _check_finite(v2, s, t_now + s.dt)
        new = Profile(state.current.grid, v2, lo2, hi2)
        ring_out = state.ring[1:] + (new,) if len(state.ring) > 1 else (new,)
        return DelayState(ring_out)
    v, lo, hi = _unwrap(state)
    if k.family == "periodic_rd_system":
        v2, lo2, hi2 = s._step_rd(v, lo, hi, t_now)
    elif k.family == "periodic_diffusion":
        v2, lo2, hi2 = s._step_periodic_diffusion(v, lo, hi, t_now)
    elif k.family == "cylinder":
        v2, lo2, hi2 = s._step_cylinder(v, lo, hi, t_now)
    else:
        raise SemiflowError(f"no stepper for family {k.family!r}")
    _check_finite(v2, s, t_now + s.dt)
    return Profile(state.grid, v2, lo2, hi2)


class FrontTracker:
    """Records the level-crossing position of the evolving profile."""

    def __init__(self, box, direction: str = "a", sample_dt: float = 0.1):
        self.box = box
        self.direction = direction
        self.sample_dt = sample_dt
        self.times: list[float] = []
        self.positions: list[float] = []

    def observe(self, t: float, p: Profile):
        q = p.current if isinstance(p, DelayState) else p
        pos = level_crossing(
            Profile(q.grid, q.values, q.left_limit, q.right_limit, None),
            self.direction, self.box)
        self.times.append(t)
        self.positions.append(pos)


class BoxMonitor:
    """Worst excursion outside the order box [bottom, top]."""

    def __init__(self, bottom, top, sample_dt: float = 0.5):
        self.bottom = np.asarray(bottom, dtype=float)
        self.top = np.asarray(top, dtype=float)
        self.sample_dt = sample_dt
        self.worst = 0.0

    def observe(self, t: float, p: Profile):
        q = p.current if isinstance(p, DelayState) else p
        below = float(np.max(self.bottom - q.values, initial=0.0))
        above = float(np.max(q.values - self.top, initial=0.0))
        self.worst = max(self.worst, below, above)


class SnapshotRecorder:
    def __init__(self, sample_dt: float = 1.0):
        self.sample_dt = sample_dt
        self.times: list[float] = []
        self.snapshots: list[Profile] = []

    def observe(self, t: float, p: Profile):
        q = p.current if isinstance(p, DelayState) else p
        self.times.append(t)
        self.snapshots.append(q)


def evolve(s: Semiflow, state, T: float, observers: Sequence = (),
           t0: float = 0.0):
    """Repeated stepping over a horizon that dt must resolve exactly."""
    if T < 0:
        raise SemiflowError("horizon must be nonnegative")
    n = int(round(T / s.dt))
    if abs(n * s.dt - T) > 1e-9 * max(1.0, T):
        raise SemiflowError(f"horizon {T} is not a multiple of dt={s.dt}")
    cadences = []
    for obs in observers:
        every = max(1, int(round(getattr(obs, "sample_dt", s.dt) / s.dt)))
        cadences.append(every)
        obs.observe(t0, state)
    t = t0
    for i in range(n):
        state = step(s, state, t)
        t = t0 + (i + 1) * s.dt
        for obs, every in zip(observers, cadences):
            if (i + 1) % every == 0:
                obs.observe(t, state)
    return state


def poincare_map(s: Semiflow) -> Callable:
    """Composition of omega/dt steps starting at phase t=0."""
    omega = s.kinetics.time_period
    if omega is None:
        raise SemiflowError("poincare_map needs time-periodic kinetics")
    ratio = omega / s.dt
    if abs(ratio - round(ratio)) > 1e-9:
        raise SemiflowError("omega is not resolvable by dt")
    return lambda p: evolve(s, p, omega)


def random_monotone_profile(grid: Grid, bottom, top, rng,
                            state_shape=None, margin_cells: int = 8) -> Profile:
    """Random nondecreasing profile, flat near the boundary for shift audits."""
    bottom = np.atleast_1d(np.asarray(bottom, dtype=float))
    top = np.atleast_1d(np.asarray(top, dtype=float))
    shape = state_shape or bottom.shape
    n = grid.n_points
    inc = rng.random((n,) + tuple(shape))
    inc[:margin_cells] = 0.0
    inc[-margin_cells:] = 0.0
    cum = np.cumsum(inc, axis=0)
    denom = np.maximum(cum[-1], 1e-12)
    frac = cum / denom
    span = (top - bottom).reshape(shape)
    inner = 0.05 + 0.9 * rng.random()
    vals = bottom.reshape(shape) + span * frac * inner
    return Profile(grid, vals, vals[0], vals[-1], monotone_flag=True)


def random_bump(grid: Grid, scale, rng, state_shape, margin_cells: int = 8) -> np.ndarray:
    x = grid.x
    c = rng.uniform(x[margin_cells], x[-margin_cells - 1])
    w = rng.uniform(2, 8) * grid.dx
    bump = np.exp(-((x - c) / w) ** 2)
    bump[:margin_cells] = 0.0
    bump[-margin_cells:] = 0.0
    out = np.zeros((grid.n_points,) + tuple(state_shape))
    out[(slice(None),) + (0,) * len(state_shape)] = scale * bump
    return out


@dataclass
class AxiomAuditReport:
    trials: int
    max_translation_residual: float
    max_comparison_violation: float
    seed: int

    def passes(self, translation_tol=1e-12, comparison_tol=1e-10) -> bool:
        return (self.max_translation_residual <= translation_tol
                and self.max_comparison_violation <= comparison_tol)


def _wrap_state(s: Semiflow, p: Profile):
    if s.kinetics.family == "nonlocal_delayed":
        return DelayState.constant_history(p, s.ring_len)
    return p


def _state_values(state):
    return state.current.values if isinstance(state, DelayState) else state.values


def audit_axioms(s: Semiflow, trials: int = 25, seed: int = 0) -> AxiomAuditReport:
    """Empirical audit of translation invariance and the comparison principle.

    Translation checks use grid-aligned shifts on profiles that are flat
    near the boundary, where the discrete stencil is exactly
    shift-equivariant.  Comparison checks step random ordered pairs.
    """
    rng = np.random.default_rng(seed)
    k = s.kinetics
    grid = s.grid
    if k.family == "cylinder":
        shape = (k.n_species, k.cross_section[2])
        bottom = np.broadcast_to(k.bottom_state[:, None], shape)
        top = np.broadcast_to(k.top_state[:, None], shape)
    else:
        shape = (k.n_species,)
        bottom, top = k.bottom_state, k.top_state
    max_shift_res = 0.0
    max_cmp_viol = 0.0
    margin = 12
    for _ in range(trials):
        p = random_monotone_profile(grid, bottom, top, rng,
                                    state_shape=shape, margin_cells=margin)
        j = int(rng.integers(1, margin - 2))
        y = j * grid.dx
        a = step(s, _wrap_state(s, translate(p, y)), 0.0)
        b = step(s, _wrap_state(s, p), 0.0)
        shifted = translate(
            Profile(grid, _state_values(b),
                    p.left_limit, p.right_limit), y)
        interior = slice(margin, grid.n_points - margin)
        res = float(np.max(np.abs(_state_values(a)[interior]
                                  - shifted.values[interior])))
        max_shift_res = max(max_shift_res, res)

        bump = random_bump(grid, 0.3 * float(np.min(top - bottom)), rng, shape,
                           margin_cells=margin)
        q_vals = np.minimum(p.values + bump, top)
        q = Profile(grid, q_vals, p.left_limit, p.right_limit)
        sp = step(s, _wrap_state(s, p), 0.0)
        sq = step(s, _wrap_state(s, q), 0.0)
        viol = float(np.max(_state_values(sp) - _state_values(sq), initial=0.0))
        max_cmp_viol = max(max_cmp_viol, viol)
    return AxiomAuditReport(trials, max_shift_res, max_cmp_viol, seed)

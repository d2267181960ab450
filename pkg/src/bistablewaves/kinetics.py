"""System-family descriptors, homogeneous dynamics, and the bistability certificate.

A Kinetics value carries everything needed to build both the semiflow and
its linearizations: the reaction field and Jacobian, diffusion data, the
time period, cross-section data for cylinder systems, and delay/kernel
data for nonlocal systems.  The spatially homogeneous system u' = f(t,u)
is analyzed here: equilibria, stability labels via the stability modulus
or principal Floquet multiplier, strong-stability probes, and the
unordered-intermediates certificate behind the bistable verdict.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Kinetics",
    "Kernel",
    "Equilibrium",
    "EquilibriumReport",
    "StabilityProbe",
    "KineticsError",
    "catalog",
    "gaussian_kernel",
    "laplace_kernel",
    "top_hat_kernel",
    "stability_modulus",
    "homogeneous_flow",
    "homogeneous_time_map",
    "find_equilibria",
    "floquet_multiplier",
    "probe_strong_stability",
    "validated_stability_radius",
    "classify_bistability",
    "cooperativity_audit",
]

EQUILIBRIUM_RESIDUAL_TOL = 1e-12
DEDUP_DISTANCE = 1e-8          # Newton residual tolerance times safety factor
MARGINAL_INDICATOR = 1e-8
STRONG_MARGIN = 1e-12          # floating-point meaning of "strictly inside the cone"


class KineticsError(ValueError):
    pass


@dataclass(frozen=True)
class Kernel:
    """Normalized dispersal kernel with an evaluatable density."""
    name: str
    width: float
    fn: Callable[[np.ndarray], np.ndarray]
    mass: float = 1.0
    # odds of the density falling outside [-support, support] are below 1e-10
    support: float = np.inf


def gaussian_kernel(sigma: float) -> Kernel:
    c = 1.0 / (sigma * np.sqrt(2 * np.pi))
    fn = lambda z: c * np.exp(-0.5 * (np.asarray(z) / sigma) ** 2)
    return Kernel("gaussian", sigma, fn, 1.0, support=7.0 * sigma)


def laplace_kernel(lam: float) -> Kernel:
    fn = lambda z: np.exp(-np.abs(np.asarray(z)) / lam) / (2 * lam)
    return Kernel("laplace", lam, fn, 1.0, support=24.0 * lam)


def top_hat_kernel(w: float) -> Kernel:
    fn = lambda z: np.where(np.abs(np.asarray(z)) <= w, 1.0 / (2 * w), 0.0)
    return Kernel("top_hat", w, fn, 1.0, support=w)


@dataclass(frozen=True)
class Kinetics:
    """Descriptor of one of the four supported system families."""

    family: str                     # periodic_rd_system | cylinder | periodic_diffusion | nonlocal_delayed
    n_species: int
    reaction: Callable              # f(t, u): u (..., n) -> (..., n)
    jacobian: Callable              # J(t, u): u (n,) -> (n, n)
    top_state: np.ndarray
    bottom_state: np.ndarray
    time_period: float | None = None
    diffusion: np.ndarray | None = None          # diagonal A, shape (n_species,)
    diffusion_fn: Callable | None = None         # d(x) for periodic_diffusion
    medium_period: float | None = None
    cross_diffusion: np.ndarray | None = None    # diagonal B for cylinder
    advection: Callable | None = None            # E(y) -> (..., n_species)
    cross_section: tuple | None = None           # (y_min, y_max, n_cross) Neumann
    delay: float | None = None
    kernel: Kernel | None = None
    birth: Callable | None = None                # b(u) under the kernel integral
    birth_prime: Callable | None = None
    decay: float | None = None                   # linear decay rate d
    label: str = ""

    def __post_init__(self):
        top = np.atleast_1d(np.asarray(self.top_state, dtype=float))
        bot = np.atleast_1d(np.asarray(self.bottom_state, dtype=float))
        object.__setattr__(self, "top_state", top)
        object.__setattr__(self, "bottom_state", bot)
        if self.family not in ("periodic_rd_system", "cylinder",
                               "periodic_diffusion", "nonlocal_delayed"):
            raise KineticsError(f"unknown family {self.family!r}")
        if self.diffusion is not None:
            a = np.atleast_1d(np.asarray(self.diffusion, dtype=float))
            if np.any(a <= 0):
                raise KineticsError("diffusion entries must be strictly positive")
            object.__setattr__(self, "diffusion", a)
        if np.any(top <= bot):
            raise KineticsError("top_state must dominate bottom_state")

    @property
    def autonomous(self) -> bool:
        return self.time_period is None

    def f(self, t: float, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.reaction(t, u), dtype=float)

    def homogeneous_rhs(self, t: float, u: np.ndarray) -> np.ndarray:
        """Spatially homogeneous field; nonlocal systems reduce by kernel mass 1."""
        if self.family == "nonlocal_delayed":
            # zero delay in the homogeneous reduction: u' = -d u + b(u)
            return -self.decay * np.asarray(u, float) + np.asarray(self.birth(u), float)
        return self.f(t, u)

    def homogeneous_jacobian(self, t: float, u: np.ndarray) -> np.ndarray:
        if self.family == "nonlocal_delayed":
            bp = np.atleast_1d(np.asarray(self.birth_prime(u), dtype=float))
            return np.diag(bp - self.decay) if bp.size > 1 else np.array([[bp[0] - self.decay]])
        return np.asarray(self.jacobian(t, u), dtype=float)


# --- reaction catalog ---------------------------------------------------------

def _scalar_poly(coeffs):
    c = np.asarray(coeffs, dtype=float)
    dc = np.polynomial.polynomial.polyder(c)

    def f(t, u):
        return np.polynomial.polynomial.polyval(np.asarray(u, float), c)

    def fp(u):
        return np.polynomial.polynomial.polyval(np.asarray(u, float), dc)

    return f, fp


def catalog(name: str, **params) -> Kinetics:
    """Named closed-form kinetics used across the test and experiment suite."""
    family = params.pop("family", None)
    if name == "cubic":
        a = float(params.pop("a", 0.25))
        f = lambda t, u: u * (1 - u) * (u - a)
        fp = lambda u: -3 * u ** 2 + 2 * (1 + a) * u - a
        return Kinetics(
            family or "periodic_rd_system", 1,
            reaction=lambda t, u: f(t, u),
            jacobian=lambda t, u: np.array([[fp(np.asarray(u).ravel()[0])]]),
            top_state=[1.0], bottom_state=[0.0],
            diffusion=params.pop("diffusion", [1.0]),
            label=f"cubic(a={a})", **params)
    if name == "cubic_odd":
        f = lambda t, u: u * (1 - u ** 2)
        fp = lambda u: 1 - 3 * u ** 2
        return Kinetics(
            family or "periodic_diffusion", 1,
            reaction=lambda t, u: f(t, u),
            jacobian=lambda t, u: np.array([[fp(np.asarray(u).ravel()[0])]]),
            top_state=[1.0], bottom_state=[-1.0],
            diffusion=params.pop("diffusion", [1.0]),
            label="cubic_odd", **params)
    if name == "poly":
        coeffs = params.pop("coefficients")
        top = params.pop("top", 1.0)
        bottom = params.pop("bottom", 0.0)
        f, fp = _scalar_poly(coeffs)
        return Kinetics(
            family or "periodic_rd_system", 1,
            reaction=f,
            jacobian=lambda t, u: np.array([[fp(np.asarray(u).ravel()[0])]]),
            top_state=[top], bottom_state=[bottom],
            diffusion=params.pop("diffusion", [1.0]),
            label="poly", **params)
    if name == "cubic_periodic":
        a0 = float(params.pop("a0", 0.25))
        a1 = float(params.pop("a1", 0.1))
        omega = float(params.pop("omega", 1.0))

        def a_of_t(t):
            return a0 + a1 * np.sin(2 * np.pi * t / omega)

        f = lambda t, u: u * (1 - u) * (u - a_of_t(t))
        fp = lambda t, u: -3 * u ** 2 + 2 * (1 + a_of_t(t)) * u - a_of_t(t)
        return Kinetics(
            family or "periodic_rd_system", 1,
            reaction=f,
            jacobian=lambda t, u: np.array([[fp(t, np.asarray(u).ravel()[0])]]),
            top_state=[1.0], bottom_state=[0.0], time_period=omega,
            diffusion=params.pop("diffusion", [1.0]),
            label=f"cubic_periodic(a0={a0},a1={a1})", **params)
    if name == "linear_periodic":
        # dv/dt = (p_bar + amp sin(2 pi t / omega)) v; Floquet test bed
        p_bar = float(params.pop("p_bar", 0.1875))
        amp = float(params.pop("amp", 1.0))
        omega = float(params.pop("omega", 1.0))
        p = lambda t: p_bar + amp * np.sin(2 * np.pi * t / omega)
        return Kinetics(
            family or "periodic_rd_system", 1,
            reaction=lambda t, u: p(t) * u,
            jacobian=lambda t, u: np.array([[p(t)]]),
            top_state=[1.0], bottom_state=[0.0], time_period=omega,
            diffusion=params.pop("diffusion", [1.0]),
            label=f"linear_periodic(p_bar={p_bar})", **params)
    if name == "cubic_pair":
        # symmetric cooperative coupling of two cubic species
        a = float(params.pop("a", 0.25))
        eps = float(params.pop("eps", 0.1))

        def f(t, u):
            u = np.asarray(u, dtype=float)
            g = u * (1 - u) * (u - a)
            swap = u[..., ::-1]
            return g + eps * (swap - u)

        def J(t, u):
            u = np.asarray(u, dtype=float).ravel()
            fp = -3 * u ** 2 + 2 * (1 + a) * u - a
            return np.array([[fp[0] - eps, eps], [eps, fp[1] - eps]])

        return Kinetics(
            family or "periodic_rd_system", 2,
            reaction=f, jacobian=J,
            top_state=[1.0, 1.0], bottom_state=[0.0, 0.0],
            diffusion=params.pop("diffusion", [1.0, 1.0]),
            label=f"cubic_pair(a={a},eps={eps})", **params)
    if name == "cubic_birth":
        # nonlocal delayed equation with b(u) = u(1-u)(u-a) + d*u, decay d
        a = float(params.pop("a", 0.25))
        decay = float(params.pop("decay", 1.0))
        b = lambda u: u * (1 - u) * (u - a) + decay * u
        bp = lambda u: -3 * u ** 2 + 2 * (1 + a) * u - a + decay
        kern = params.pop("kernel", gaussian_kernel(0.2))
        delay = float(params.pop("delay", 0.1))
        return Kinetics(
            "nonlocal_delayed", 1,
            reaction=lambda t, u: -decay * u + b(u),      # homogeneous reduction
            jacobian=lambda t, u: np.array([[bp(np.asarray(u).ravel()[0]) - decay]]),
            top_state=[1.0], bottom_state=[0.0],
            diffusion=params.pop("diffusion", [1.0]),
            delay=delay, kernel=kern, birth=b, birth_prime=bp, decay=decay,
            label=f"cubic_birth(a={a},decay={decay})", **params)
    raise KineticsError(f"unknown catalog kinetics {name!r}")


# --- spatially homogeneous dynamics -------------------------------------------

def stability_modulus(J) -> float:
    """s(M) = max Re(lambda) over eigenvalues of M."""
    M = np.atleast_2d(np.asarray(J, dtype=float))
    if not np.all(np.isfinite(M)):
        raise KineticsError("stability_modulus needs finite entries")
    if M.shape == (1, 1):
        return float(M[0, 0])
    return float(np.max(np.linalg.eigvals(M).real))


def homogeneous_flow(k: Kinetics, u0, t0: float, t1: float,
                     n_steps: int | None = None) -> np.ndarray:
    """RK4 flow of the homogeneous system u' = f(t, u)."""
    u = np.atleast_1d(np.asarray(u0, dtype=float)).copy()
    span = t1 - t0
    if span == 0:
        return u
    if n_steps is None:
        n_steps = max(64, int(np.ceil(abs(span) * 256)))
    h = span / n_steps
    rhs = k.homogeneous_rhs
    t = t0
    for _ in range(n_steps):
        k1 = rhs(t, u)
        k2 = rhs(t + h / 2, u + h / 2 * k1)
        k3 = rhs(t + h / 2, u + h / 2 * k2)
        k4 = rhs(t + h, u + h * k3)
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return u


def homogeneous_time_map(k: Kinetics, span: float | None = None,
                         t0: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Time-span map of u' = f(t,u); defaults to the period map / time-1 map."""
    if span is None:
        span = k.time_period if k.time_period else 1.0
    return lambda u: homogeneous_flow(k, u, t0, t0 + span)


@dataclass(frozen=True)
class Equilibrium:
    state: np.ndarray
    stability: str = "unlabeled"     # stable | unstable | marginal | unlabeled
    indicator: float = np.nan
    on_boundary: bool = False


@dataclass
class EquilibriumReport:
    equilibria: list
    unordered_certificate: bool = False
    bistable: bool = False
    alpha_list: list = field(default_factory=list)
    reason: str = ""
    newton_failures: int = 0

    def states(self) -> list:
        return [e.state for e in self.equilibria]


def _newton_polish(g, J, u0, box, tol=EQUILIBRIUM_RESIDUAL_TOL, max_iter=60):
    u = np.atleast_1d(np.asarray(u0, dtype=float)).copy()
    lo, hi = box
    for _ in range(max_iter):
        r = np.atleast_1d(g(u))
        if np.max(np.abs(r)) <= tol:
            return u
        A = np.atleast_2d(J(u))
        try:
            step = np.linalg.solve(A, -r)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        nrm = np.max(np.abs(step))
        if nrm > 0.5:
            step *= 0.5 / nrm
        u = u + step
        if np.any(u < lo - 0.5) or np.any(u > hi + 0.5):
            return None
    r = np.atleast_1d(g(u))
    return u if np.max(np.abs(r)) <= tol else None


def _fd_jacobian(g, u, h=1e-7):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = u.size
    r0 = np.atleast_1d(g(u))
    J = np.empty((n, n))
    for j in range(n):
        du = u.copy()
        du[j] += h
        J[:, j] = (np.atleast_1d(g(du)) - r0) / h
    return J


def find_equilibria(k: Kinetics, resolution: int = 64) -> EquilibriumReport:
    """Equilibria of the homogeneous system inside [bottom, top], unlabeled.

    Scalar autonomous kinetics bracket sign changes on a resolution-point
    grid and refine by bisection+Newton; systems run Newton from a seed
    lattice; time-periodic kinetics search fixed points of the period map.
    """
    lo = k.bottom_state
    hi = k.top_state
    n = k.n_species
    failures = 0
    found: list[np.ndarray] = []

    if k.autonomous:
        g = lambda u: np.atleast_1d(k.homogeneous_rhs(0.0, u))
        Jg = lambda u: np.atleast_2d(k.homogeneous_jacobian(0.0, u))
    else:
        omega = k.time_period
        flow = lambda u: homogeneous_flow(k, u, 0.0, omega,
                                          n_steps=max(256, int(omega * 512)))
        g = lambda u: flow(u) - np.atleast_1d(u)
        Jg = lambda u: _fd_jacobian(g, u)

    if n == 1 and k.autonomous:
        xs = np.linspace(lo[0], hi[0], resolution)
        vals = np.array([g(np.array([x]))[0] for x in xs])
        if np.max(np.abs(vals)) <= 1e-14:
            rep = EquilibriumReport([Equilibrium(np.array([x]), "marginal", 0.0)
                                     for x in xs])
            rep.reason = "degenerate: reaction identically zero on the box"
            return rep
        for i in range(resolution - 1):
            a, b = xs[i], xs[i + 1]
            fa, fb = vals[i], vals[i + 1]
            if fa == 0.0:
                found.append(np.array([a]))
                continue
            if fa * fb < 0:
                for _ in range(80):          # bisection to residual scale
                    m = 0.5 * (a + b)
                    fm = g(np.array([m]))[0]
                    if fa * fm <= 0:
                        b, fb = m, fm
                    else:
                        a, fa = m, fm
                u = _newton_polish(g, Jg, np.array([0.5 * (a + b)]), (lo, hi))
                if u is None:
                    failures += 1
                else:
                    found.append(u)
        if vals[-1] == 0.0:
            found.append(np.array([xs[-1]]))
    else:
        per_dim = max(3, int(round(resolution ** (1.0 / n))))
        axes = [np.linspace(lo[j], hi[j], per_dim) for j in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        seeds = np.stack([m.ravel() for m in mesh], axis=1)
        for s in seeds:
            u = _newton_polish(g, Jg, s, (lo, hi),
                               tol=EQUILIBRIUM_RESIDUAL_TOL if k.autonomous else 1e-11)
            if u is None:
                failures += 1
            elif np.all(u >= lo - 1e-9) and np.all(u <= hi + 1e-9):
                found.append(np.clip(u, lo, hi))

    uniq: list[np.ndarray] = []
    for u in sorted(found, key=lambda v: tuple(v)):
        if not any(np.max(np.abs(u - v)) < DEDUP_DISTANCE for v in uniq):
            uniq.append(u)
    eqs = [Equilibrium(u, on_boundary=bool(
        np.any(np.abs(u - lo) < 1e-9) or np.any(np.abs(u - hi) < 1e-9)))
        for u in uniq]
    rep = EquilibriumReport(eqs)
    rep.newton_failures = failures
    return rep


def _orbit_lookup(k: Kinetics, alpha_orbit, omega: float, n_steps: int):
    """Return u(t) on the RK4 half-step lattice from a callable or samples."""
    if callable(alpha_orbit):
        return alpha_orbit
    arr = np.asarray(alpha_orbit, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    ts = np.linspace(0.0, omega, arr.shape[0])

    def lookup(t):
        out = np.empty(arr.shape[1])
        for j in range(arr.shape[1]):
            out[j] = np.interp(t % omega, ts, arr[:, j])
        return out

    return lookup


def floquet_multiplier(k: Kinetics, alpha_orbit, mu: float,
                       n_steps: int = 2000) -> float:
    """Principal Floquet multiplier rho(mu) of dv/dt = [mu^2 A + D_u f(t, alpha(t))] v.

    Integrates the fundamental matrix over one period with classic RK4.
    Cooperativity of the Jacobian is checked at every sample; the principal
    multiplier of a cooperative irreducible periodic system is real positive.
    """
    if k.time_period is None:
        raise KineticsError("floquet_multiplier needs time-periodic kinetics")
    omega = k.time_period
    A = np.diag(k.diffusion if k.diffusion is not None else np.ones(k.n_species))
    orbit = _orbit_lookup(k, alpha_orbit, omega, n_steps)

    def M(t):
        J = np.atleast_2d(k.jacobian(t, orbit(t)))
        if k.n_species > 1:
            off = J - np.diag(np.diag(J))
            if np.min(off) < -1e-12:
                raise KineticsError(
                    f"non-cooperative Jacobian at t={t:.6g} (violates the cooperativity hypothesis)")
        return mu ** 2 * A + J

    h = omega / n_steps
    Phi = np.eye(k.n_species)
    t = 0.0
    for _ in range(n_steps):
        k1 = M(t) @ Phi
        k2 = M(t + h / 2) @ (Phi + h / 2 * k1)
        k3 = M(t + h / 2) @ (Phi + h / 2 * k2)
        k4 = M(t + h) @ (Phi + h * k3)
        Phi = Phi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    eig = np.linalg.eigvals(Phi)
    rho = float(np.max(np.abs(eig)))
    return rho


@dataclass
class StabilityProbe:
    """delta-probe of strong stability at an equilibrium along a positive direction."""

    equilibrium: np.ndarray
    direction: np.ndarray
    delta_grid: np.ndarray
    side: str                       # above | below
    verdicts: list = field(default_factory=list)
    overall: str = "inconclusive"

    def __post_init__(self):
        self.equilibrium = np.atleast_1d(np.asarray(self.equilibrium, dtype=float))
        e = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if np.any(e <= 0):
            raise KineticsError("probe direction must be strongly positive")
        self.direction = e / np.max(np.abs(e))
        d = np.asarray(self.delta_grid, dtype=float)
        if d.size == 0 or np.any(d <= 0) or np.any(np.diff(d) >= 0):
            raise KineticsError("delta_grid must be strictly decreasing positives")
        self.delta_grid = d
        if self.side not in ("above", "below"):
            raise KineticsError("side must be 'above' or 'below'")


def probe_strong_stability(step_map: Callable, probe: StabilityProbe,
                           box=None, margin: float = STRONG_MARGIN) -> StabilityProbe:
    """Fill per-delta verdicts by testing Q at equilibrium +/- delta*e.

    side='above' probes alpha + delta e: Q[u] << u confirms stability from
    above, Q[u] >> u confirms instability from above.  side='below' probes
    alpha - delta e with the inequalities reversed.  The overall verdict is
    the consensus of the three smallest deltas.
    """
    alpha = probe.equilibrium
    e = probe.direction
    sign = 1.0 if probe.side == "above" else -1.0
    verdicts = []
    scale = max(float(np.max(np.abs(alpha))), 1.0)
    for delta in probe.delta_grid:
        u = alpha + sign * delta * e
        if box is not None:
            lo, hi = box
            if np.any(u < np.asarray(lo) - 1e-12) or np.any(u > np.asarray(hi) + 1e-12):
                raise KineticsError(
                    f"probe at delta={delta} leaves the admissible box")
        qu = np.atleast_1d(step_map(u))
        diff = sign * (qu - u)       # negative everywhere = pulled back to alpha
        if np.max(diff) < -margin * scale:
            verdicts.append("confirms_stable")
        elif np.min(diff) > margin * scale:
            verdicts.append("confirms_unstable")
        else:
            verdicts.append("inconclusive")
    probe.verdicts = verdicts
    tail = verdicts[-min(3, len(verdicts)):]
    probe.overall = tail[0] if all(v == tail[0] for v in tail) else "inconclusive"
    return probe


def validated_stability_radius(k: Kinetics, equilibrium, side: str,
                               direction=None, n_deltas: int = 5,
                               report: EquilibriumReport | None = None) -> float:
    """Largest probed delta below which every probe confirms stability.

    The delta grid descends from half the gap to the nearest other
    equilibrium; a zero return means no stability could be confirmed.
    """
    alpha = np.atleast_1d(np.asarray(equilibrium, dtype=float))
    rep = report if report is not None else find_equilibria(k)
    gaps = [np.max(np.abs(alpha - s)) for s in rep.states()
            if np.max(np.abs(alpha - s)) > DEDUP_DISTANCE]
    gap = min(gaps) if gaps else float(np.max(k.top_state - k.bottom_state))
    deltas = gap * np.geomspace(0.5, 0.01, n_deltas)
    e = np.ones_like(alpha) if direction is None else np.asarray(direction, float)
    probe = StabilityProbe(alpha, e, deltas, side)
    Q = homogeneous_time_map(k)
    probe = probe_strong_stability(Q, probe, box=(k.bottom_state, k.top_state))
    radius = 0.0
    for delta, v in sorted(zip(probe.delta_grid, probe.verdicts)):
        if v == "confirms_stable":
            radius = delta
        else:
            break
    return radius


def _label_equilibrium(k: Kinetics, u: np.ndarray) -> tuple[str, float]:
    if k.autonomous:
        indicator = stability_modulus(k.homogeneous_jacobian(0.0, u))
    else:
        omega = k.time_period
        orbit = lambda t: homogeneous_flow(k, u, 0.0, t % omega,
                                           n_steps=max(32, int(256 * (t % omega) / omega) + 1))
        rho = floquet_multiplier(k, orbit, 0.0)
        indicator = np.log(rho) / omega
    if abs(indicator) < MARGINAL_INDICATOR:
        return "marginal", indicator
    return ("unstable" if indicator > 0 else "stable"), indicator


def classify_bistability(k: Kinetics, resolution: int = 64,
                         report: EquilibriumReport | None = None) -> EquilibriumReport:
    """Stability labels plus the unordered-intermediates certificate.

    bistable requires: bottom and top states fixed and stable, every
    intermediate unstable, and all intermediates pairwise unordered (or a
    singleton).  A marginal equilibrium makes the verdict inconclusive.
    """
    rep = report if report is not None else find_equilibria(k, resolution)
    labeled = []
    for e in sorted(rep.equilibria, key=lambda q: tuple(q.state)):
        lab, ind = _label_equilibrium(k, e.state)
        labeled.append(Equilibrium(e.state, lab, ind, e.on_boundary))
    rep.equilibria = labeled

    def present(target):
        for e in labeled:
            if np.max(np.abs(e.state - target)) < 1e-6:
                return e
        return None

    zero = present(k.bottom_state)
    beta = present(k.top_state)
    inter = [e for e in labeled
             if e is not zero and e is not beta]
    rep.alpha_list = [e.state for e in inter]

    # pairwise unordered certificate over the intermediates
    unordered = True
    for i in range(len(inter)):
        for j in range(i + 1, len(inter)):
            a, b = inter[i].state, inter[j].state
            if np.all(a <= b + 1e-12) or np.all(b <= a + 1e-12):
                unordered = False
    rep.unordered_certificate = unordered

    if any(e.stability == "marginal" for e in labeled):
        rep.bistable = False
        rep.reason = "marginal equilibrium: verdict inconclusive"
        return rep
    if zero is None:
        rep.bistable = False
        rep.reason = "bottom state not fixed"
        return rep
    if beta is None:
        rep.bistable = False
        rep.reason = "top state not fixed"
        return rep
    if zero.stability != "stable" or beta.stability != "stable":
        rep.bistable = False
        rep.reason = "an endpoint equilibrium is not stable"
        return rep
    if any(e.stability != "unstable" for e in inter):
        rep.bistable = False
        rep.reason = "a non-endpoint equilibrium is stable"
        return rep
    if not unordered:
        rep.bistable = False
        rep.reason = "ordered pair of intermediate equilibria"
        return rep
    rep.bistable = True
    rep.reason = ""
    return rep


def cooperativity_audit(k: Kinetics, n_samples: int = 50, seed: int = 0) -> dict:
    """Sampled check of cooperativity and irreducibility of the Jacobian."""
    rng = np.random.default_rng(seed)
    lo, hi = k.bottom_state, k.top_state
    omega = k.time_period or 1.0
    worst_offdiag = np.inf
    support = np.zeros((k.n_species, k.n_species), dtype=bool)
    for _ in range(n_samples):
        u = lo + rng.random(k.n_species) * (hi - lo)
        t = rng.random() * omega
        J = np.atleast_2d(k.homogeneous_jacobian(t, u))
        off = J - np.diag(np.diag(J))
        worst_offdiag = min(worst_offdiag, float(np.min(off)) if k.n_species > 1 else 0.0)
        support |= np.abs(J) > 1e-12
    np.fill_diagonal(support, True)
    # irreducibility: every node reaches every node through the support graph
    reach = support.copy()
    for _ in range(k.n_species):
        reach = reach | (reach @ support)
    irreducible = bool(np.all(reach))
    return {
        "cooperative": worst_offdiag >= -1e-12,
        "worst_offdiagonal": worst_offdiag,
        "irreducible": irreducible,
        "n_samples": n_samples,
    }

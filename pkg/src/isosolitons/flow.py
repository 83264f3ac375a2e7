"""Method-of-lines solvers for the radial isometric flow.

Flat and cone backgrounds: ``u_t = u'' + 6u'/r - 6 sin u / r²`` on nodes
``r_j = j Δr``, with ``u(0) = 0`` supplied by odd reflection, Heun (RK2)
in time.  Calabi-Yau cylinder: the heat equation ``u_t = u''`` on a circle
or an interval, forward Euler in time.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .cases import BackgroundCase
from .errors import CflError

TOPOLOGIES = ("radial", "circle", "line")
BOUNDARIES = ("clamp", "neumann")


@dataclass(frozen=True)
class FlowGrid:
    """Nodes, values and time for one flow state.

    ``radial``: nodes ``Δr, 2Δr, ..., R``.  ``circle``: ``N`` nodes
    ``j·2π/N`` (wrap implied).  ``line``: nodes including both endpoints.
    ``boundary_values`` holds the clamped end values (radial: outer only).
    """

    topology: str
    nodes: np.ndarray
    u: np.ndarray
    t: float = 0.0
    cfl_safety: float = 0.25
    boundary: str = "clamp"
    boundary_values: tuple = ()

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if not 0 < self.cfl_safety < 1:
            raise ValueError("cfl_safety must lie in (0, 1)")
        for name in ("nodes", "u"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.nodes.shape != self.u.shape or self.nodes.size < 3:
            raise ValueError("need at least three nodes with matching values")
        if not self.boundary_values:
            vals = (float(self.u[-1]),) if self.topology == "radial" else (float(self.u[0]), float(self.u[-1]))
            object.__setattr__(self, "boundary_values", vals)

    @property
    def spacing(self):
        if self.topology == "circle":
            return 2 * math.pi / self.nodes.size
        return float(self.nodes[1] - self.nodes[0])

    @property
    def dt_max(self):
        return self.cfl_safety * self.spacing**2 / 2

    def with_values(self, u, t):
        return dataclasses.replace(self, u=u, t=t)

    def odd_extension(self):
        """Nodes and values on ``[-R, R]`` with the reflected ghost half and ``u(0) = 0``."""
        if self.topology != "radial":
            raise ValueError("odd extension applies to radial grids")
        r = np.concatenate([-self.nodes[::-1], [0.0], self.nodes])
        u = np.concatenate([-self.u[::-1], [0.0], self.u])
        return r, u


def radial_grid(R, dr, u_fn, *, cfl_safety=0.25, boundary="clamp"):
    n = int(round(R / dr))
    if n < 3 or abs(n * dr - R) > 1e-9 * R:
        raise ValueError("R must be a multiple of dr with at least three nodes")
    r = dr * np.arange(1, n + 1)
    return FlowGrid("radial", r, u_fn(r), cfl_safety=cfl_safety, boundary=boundary)


def circle_grid(n, u_fn, *, cfl_safety=0.25):
    x = 2 * math.pi * np.arange(n) / n
    return FlowGrid("circle", x, u_fn(x), cfl_safety=cfl_safety)


def line_grid(a, b, n, u_fn, *, cfl_safety=0.25, boundary="clamp"):
    x = np.linspace(a, b, n)
    return FlowGrid("line", x, u_fn(x), cfl_safety=cfl_safety, boundary=boundary)


# -- spatial operators ---------------------------------------------------------

def _pad_radial(grid: FlowGrid, u):
    # u_0 = 0 from odd symmetry; outer ghost for the Neumann option
    outer = u[-2] if grid.boundary == "neumann" else u[-1]
    return np.concatenate([[0.0], u, [outer]])


def radial_rate(grid: FlowGrid, u=None):
    """Discrete ``u'' + 6u'/r - 6 sin u / r²`` at every node (clamped node gets 0)."""
    u = grid.u if u is None else u
    h = grid.spacing
    r = grid.nodes
    p = _pad_radial(grid, u)
    d2 = (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2
    d1 = (p[2:] - p[:-2]) / (2 * h)
    rate = d2 + 6 * d1 / r - 6 * np.sin(u) / r**2
    if grid.boundary == "clamp":
        rate[-1] = 0.0
    return rate


def heat_rate(grid: FlowGrid, u=None):
    """Discrete ``u''`` with periodic wrap or line boundary."""
    u = grid.u if u is None else u
    h = grid.spacing
    if grid.topology == "circle":
        return (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / h**2
    rate = np.empty_like(u)
    rate[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    if grid.boundary == "clamp":
        rate[0] = rate[-1] = 0.0
    else:
        rate[0] = 2 * (u[1] - u[0]) / h**2
        rate[-1] = 2 * (u[-2] - u[-1]) / h**2
    return rate


def _check_cfl(grid: FlowGrid, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt > grid.dt_max * (1 + 1e-12):
        raise CflError(f"dt={dt:.3e} exceeds cfl_safety*h^2/2={grid.dt_max:.3e}")


def step_flat_nk(grid: FlowGrid, dt) -> FlowGrid:
    """One Heun step of the flat/cone flow."""
    if grid.topology != "radial":
        raise ValueError("flat/cone flow needs a radial grid")
    _check_cfl(grid, dt)
    k1 = radial_rate(grid)
    k2 = radial_rate(grid, grid.u + dt * k1)
    u = grid.u + 0.5 * dt * (k1 + k2)
    if grid.boundary == "clamp":
        u[-1] = grid.boundary_values[0]
    return grid.with_values(u, grid.t + dt)


def step_cy(grid: FlowGrid, dt) -> FlowGrid:
    """One forward-Euler heat step (preserves the discrete maximum principle)."""
    if grid.topology == "radial":
        raise ValueError("the cylinder flow runs on a circle or a line")
    _check_cfl(grid, dt)
    u = grid.u + dt * heat_rate(grid)
    if grid.topology == "line" and grid.boundary == "clamp":
        u[0], u[-1] = grid.boundary_values
    return grid.with_values(u, grid.t + dt)


def weighted_l2(grid: FlowGrid, values):
    """``L²`` norm for the radial volume ``r⁶ dr`` (radial) or ``dx`` (cylinder)."""
    w = grid.nodes**6 if grid.topology == "radial" else np.ones_like(grid.nodes)
    return float(math.sqrt(np.sum(w * np.asarray(values) ** 2) * grid.spacing))


# -- diagnostics ----------------------------------------------------------------

def _derivs(grid: FlowGrid, u):
    h = grid.spacing
    if grid.topology == "circle":
        up, um = np.roll(u, -1), np.roll(u, 1)
        return (up - um) / (2 * h), (up - 2 * u + um) / h**2, np.ones(u.size, bool)
    if grid.topology == "radial":
        p = np.concatenate([[0.0], u, [np.nan]])
    else:
        p = np.concatenate([[np.nan], u, [np.nan]])
    d1 = (p[2:] - p[:-2]) / (2 * h)
    d2 = (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2
    return d1, d2, np.isfinite(d1)


def torsion_density(grid: FlowGrid, u=None):
    """Pointwise ``|T|²`` of the state (boundary nodes use one-sided slopes)."""
    u = grid.u if u is None else u
    h = grid.spacing
    if grid.topology == "circle":
        du = (np.roll(u, -1) - np.roll(u, 1)) / (2 * h)
    elif grid.topology == "radial":
        du = np.gradient(np.concatenate([[0.0], u]), h)[1:]
    else:
        du = np.gradient(u, h)
    if grid.topology == "radial":
        return du**2 + 24 * np.sin(u / 2) ** 2 / grid.nodes**2
    return 4 * du**2


def energy(grid: FlowGrid, u=None):
    """Quadrature of ``|T|²`` against ``r⁶ dr`` (radial) or ``dx`` (cylinder)."""
    dens = torsion_density(grid, u)
    w = grid.nodes**6 if grid.topology == "radial" else np.ones_like(grid.nodes)
    return float(np.sum(w * dens) * grid.spacing)


def q_field(grid: FlowGrid, *, min_da=1e-8, region=None):
    """Pointwise ``Q`` with a mask of usable nodes.

    Radial: ``(r²u'' + 6ru' - 6 sin u)/(r³u')``, masked where
    ``|a'| = |cos(u/2) u'|/2 <= min_da``.  Cylinder: ``u''/u'`` masked where
    ``|u'| <= min_da``.
    """
    u = grid.u
    d1, d2, ok = _derivs(grid, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        if grid.topology == "radial":
            r = grid.nodes
            q = (r * r * d2 + 6 * r * d1 - 6 * np.sin(u)) / (r**3 * d1)
            ok &= np.abs(np.cos(u / 2) * d1 / 2) > min_da
        else:
            q = d2 / d1
            ok &= np.abs(d1) > min_da
    if region is not None:
        ok &= (grid.nodes >= region[0]) & (grid.nodes <= region[1])
    q = np.where(ok, q, np.nan)
    return q, ok


def monitor_q_evolution(history, *, region=None, min_da=1e-8):
    """Statistics of ``Q`` over a list of grids (oldest first).

    For cylinder grids with at least three snapshots the discrete residual
    ``Q_t - (Q'' + 2 Q Q')`` is added, with ``Q_t`` from centred time
    differences; it is returned per interior snapshot as a max-norm.
    """
    rows = []
    fields = []
    for g in history:
        q, ok = q_field(g, min_da=min_da)
        fields.append(q)
        if region is not None:
            ok = ok & (g.nodes >= region[0]) & (g.nodes <= region[1])
        vals = q[ok]
        rows.append({
            "t": g.t,
            "q_mean": float(np.mean(vals)) if vals.size else math.nan,
            "q_min": float(np.min(vals)) if vals.size else math.nan,
            "q_max": float(np.max(vals)) if vals.size else math.nan,
            "masked": int(np.count_nonzero(~ok)),
        })
    if history and history[0].topology != "radial":
        for i in range(1, len(history) - 1):
            g = history[i]
            q_mid = fields[i]
            q_t = (fields[i + 1] - fields[i - 1]) / (history[i + 1].t - history[i - 1].t)
            dq, d2q, _ = _derivs(g, q_mid)
            # Q must be defined on the node and both neighbours
            good = np.isfinite(q_t) & np.isfinite(d2q)
            if region is not None:
                good &= (g.nodes >= region[0]) & (g.nodes <= region[1])
            res = q_t - (d2q + 2 * q_mid * dq)
            rows[i]["evolution_residual"] = float(np.max(np.abs(res[good]))) if good.any() else math.nan
    return rows


# -- driver ------------------------------------------------------------------------

@dataclass
class FlowConfig:
    """Parameters of one flow run; see :func:`FlowConfig.from_dict` for keys."""

    topology: str = "radial"
    background: str = "flat"
    length: float = 50.0  # R for radial, interval length for line
    spacing: float = 0.05
    n_nodes: int = 256  # circle only
    t_end: float = 1.0
    cfl_safety: float = 0.25
    dt: float | None = None
    boundary: str = "clamp"
    initial: dict = field(default_factory=lambda: {"kind": "zero"})
    snapshot_every: float | None = None
    steady_tol: float = 1e-10
    q_region: tuple | None = None

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown flow config keys: {sorted(extra)}")
        cfg = cls(**data)
        if cfg.q_region is not None:
            cfg.q_region = tuple(cfg.q_region)
        cfg.validate()
        return cfg

    def validate(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if self.topology == "radial" and self.background not in ("flat", "nk"):
            raise ValueError("radial flows run on the flat or nearly-Kahler background")
        if self.topology != "radial" and self.background != "cy":
            raise ValueError("circle and line flows run on the Calabi-Yau cylinder")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")

    def build_grid(self) -> FlowGrid:
        init = initial_profile(self)
        if self.topology == "radial":
            return radial_grid(self.length, self.spacing, init, cfl_safety=self.cfl_safety,
                               boundary=self.boundary)
        if self.topology == "circle":
            return circle_grid(self.n_nodes, init, cfl_safety=self.cfl_safety)
        n = int(round(self.length / self.spacing)) + 1
        return line_grid(0.0, self.length, n, init, cfl_safety=self.cfl_safety, boundary=self.boundary)


def initial_profile(cfg: FlowConfig):
    """Callable of the nodes for ``cfg.initial``.

    Kinds: ``zero``; ``constant`` (value); ``sine`` (amplitude, mode,
    offset); ``fourier`` (seed, modes, offset; random smooth data);
    ``exponential`` (c0, c1, b: the cylinder soliton); ``linear`` (slope,
    amplitude: ``slope x + amplitude sin x``); ``soliton`` (c, a1,
    perturb: flat soliton plus ``perturb · r e^{-r²}``).
    """
    spec = dict(cfg.initial)
    kind = spec.pop("kind", "zero")
    if kind == "zero":
        return np.zeros_like
    if kind == "constant":
        v = float(spec.get("value", 0.0))
        return lambda x: np.full_like(x, v)
    if kind == "sine":
        amp, mode, off = float(spec.get("amplitude", 1.0)), int(spec.get("mode", 1)), float(spec.get("offset", 0.0))
        return lambda x: off + amp * np.sin(mode * x)
    if kind == "fourier":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        modes = int(spec.get("modes", 4))
        ca, cb = rng.normal(size=modes), rng.normal(size=modes)
        off = float(spec.get("offset", 0.0))
        k = np.arange(1, modes + 1)
        return lambda x: off + (ca / k**2) @ np.cos(np.outer(k, x)) + (cb / k**2) @ np.sin(np.outer(k, x))
    if kind == "exponential":
        c0, c1, b = float(spec.get("c0", 0.0)), float(spec.get("c1", 1.0)), float(spec.get("b", 1.0))
        return lambda x: c0 + c1 * np.exp(b * x)
    if kind == "linear":
        slope, amp = float(spec.get("slope", 1.0)), float(spec.get("amplitude", 0.0))
        return lambda x: slope * x + amp * np.sin(x)
    if kind == "soliton":
        from .integrator import solve_soliton
        case = BackgroundCase.flat(float(spec.get("c", 0.0)))
        traj = solve_soliton(case, float(spec.get("a1", 0.5)), r_max=cfg.length * (1 + 1e-9),
                             tol=float(spec.get("tol", 1e-10)), diagnostics=False)
        eps = float(spec.get("perturb", 0.0))
        return lambda r: traj.evaluate(r)[0] + eps * r * np.exp(-r * r)
    raise ValueError(f"unknown initial data kind {kind!r}")


@dataclass
class FlowReport:
    times: list
    sup_u: list
    energy: list
    q_stats: list
    snapshots: list
    steps: int
    steady: bool
    reason: str
    distance_to_initial: list
    distance_to_reference: list = field(default_factory=list)

    def as_dict(self):
        return {
            "times": self.times, "sup_u": self.sup_u, "energy": self.energy,
            "q_stats": self.q_stats, "steps": self.steps, "steady": self.steady,
            "reason": self.reason, "distance_to_initial": self.distance_to_initial,
            "distance_to_reference": self.distance_to_reference,
            "snapshot_times": [g.t for g in self.snapshots],
        }


def snapshot_rows(grid: FlowGrid):
    """Rows ``(r, u, a, torsion_density)``; ``a = sin(u/2)`` radially, ``sin u`` on the cylinder."""
    a = np.sin(grid.u / 2) if grid.topology == "radial" else np.sin(grid.u)
    return np.column_stack([grid.nodes, grid.u, a, torsion_density(grid)])


def run_flow(cfg: FlowConfig) -> FlowReport:
    """Advance to ``t_end`` or until ``sup|u_t| < steady_tol``."""
    cfg.validate()
    grid = cfg.build_grid()
    step = step_flat_nk if cfg.topology == "radial" else step_cy
    rate = radial_rate if cfg.topology == "radial" else heat_rate
    dt = cfg.dt if cfg.dt is not None else grid.dt_max
    _check_cfl(grid, dt)
    u0 = grid.u.copy()
    # perturbed solitons are compared with the unperturbed profile
    ref = u0
    if cfg.initial.get("kind") == "soliton" and cfg.initial.get("perturb", 0.0):
        ref = dataclasses.replace(cfg, initial={**cfg.initial, "perturb": 0.0}).build_grid().u
    every = cfg.snapshot_every if cfg.snapshot_every else max(cfg.t_end, dt)
    rep = FlowReport([], [], [], [], [], 0, False, "t_end", [])

    def record(g):
        rep.times.append(g.t)
        rep.sup_u.append(float(np.max(np.abs(g.u))))
        rep.energy.append(energy(g))
        rep.distance_to_initial.append(weighted_l2(g, g.u - u0))
        rep.distance_to_reference.append(weighted_l2(g, g.u - ref))
        rep.snapshots.append(g)

    record(grid)
    next_snap = every
    while True:
        if float(np.max(np.abs(rate(grid)))) < cfg.steady_tol:
            rep.steady, rep.reason = True, "steady"
            break
        if grid.t >= cfg.t_end - 1e-12:
            break
        h = min(dt, cfg.t_end - grid.t)
        grid = step(grid, h)
        rep.steps += 1
        if grid.t >= next_snap - 1e-12:
            record(grid)
            next_snap += every
    if rep.snapshots[-1] is not grid:
        record(grid)
    rep.q_stats = monitor_q_evolution(rep.snapshots, region=cfg.q_region)
    return rep

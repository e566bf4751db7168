"""Time integration, energy bookkeeping and cost evaluation.

The semigroup is analytic, so the semi-discrete system is stiff and the
schemes here are unconditionally stable implicit one-step methods:
trapezoidal (default, second order) and implicit Euler.  The implicit
matrix is factorized once per (dt, scheme) and reused across the march.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .discretization import SemiDiscreteSystem, State, dqdx_nodal, energy_matrix
from .errors import NonDecayingTail, SingularSystem

_SCHEMES = ("trapezoidal", "implicit_euler")


class Stepper:
    """One-step implicit integrator with a cached LU factorization."""

    def __init__(self, system: SemiDiscreteSystem, dt, scheme="trapezoidal"):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {scheme!r}")
        self.system = system
        self.dt = float(dt)
        self.scheme = scheme
        eye = np.eye(system.dim)
        a = system.A
        if scheme == "trapezoidal":
            implicit = eye - 0.5 * dt * a
            self._explicit = eye + 0.5 * dt * a
        else:
            implicit = eye - dt * a
            self._explicit = eye
        try:
            self._lu = sla.lu_factor(implicit)
        except (ValueError, sla.LinAlgError) as exc:
            raise SingularSystem(f"implicit matrix singular for dt={dt}") from exc
        if np.any(np.diag(self._lu[0]) == 0):
            raise SingularSystem(f"implicit matrix singular for dt={dt}")

    def advance(self, z, u_now, u_next):
        b = self.system.B
        if self.scheme == "trapezoidal":
            rhs = self._explicit @ z + 0.5 * self.dt * b * (u_now + u_next)
        else:
            rhs = z + self.dt * b * u_next
        return sla.lu_solve(self._lu, rhs)


def step(system, state: State, u_now, u_next, dt, scheme="trapezoidal") -> State:
    """Advance one implicit step; convenience wrapper around :class:`Stepper`."""
    stepper = Stepper(system, dt, scheme)
    z = stepper.advance(state.flatten(system.grid), u_now, u_next)
    return State.unflatten(z, system.grid)


@dataclass
class Trajectory:
    """Sampled closed- or open-loop run with per-sample energy."""

    times: np.ndarray
    states: np.ndarray  # (n_samples, state_dim)
    inputs: np.ndarray
    energies: np.ndarray
    system: SemiDiscreteSystem

    def outputs(self) -> np.ndarray:
        """Hdot = C z along the trajectory."""
        return self.states @ self.system.C

    def state_at(self, k) -> State:
        return State.unflatten(self.states[k], self.system.grid)

    def write_csv(self, path):
        grid = self.system.grid
        n = grid.n_side
        iqm, iqp = 4 * n - 3, 4 * n - 2
        data = np.column_stack([
            self.times,
            self.states[:, 0],
            self.outputs(),
            self.states[:, iqm],
            self.states[:, iqp],
            self.energies,
            self.inputs,
        ])
        np.savetxt(path, data, delimiter=",",
                   header="t,H,Hdot,q_minus,q_plus,E,u", comments="")


def simulate(system, z0, T, dt, u=None, gain=None, scheme="trapezoidal") -> Trajectory:
    """March the system from z0 for a horizon T with step dt.

    ``u`` gives an open-loop input (a callable of t or an array with one
    sample per step boundary); ``gain`` a state-feedback row vector K
    applying u = -K z.  At most one of the two may be given; neither
    means u = 0.
    """
    if u is not None and gain is not None:
        raise ValueError("pass an open-loop input or a feedback gain, not both")
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    grid = system.grid
    z = z0.flatten(grid) if isinstance(z0, State) else np.asarray(z0, dtype=float).copy()
    n_steps = int(round(T / dt))
    times = dt * np.arange(n_steps + 1)

    states = np.empty((n_steps + 1, system.dim))
    inputs = np.empty(n_steps + 1)
    states[0] = z

    if gain is not None:
        gain = np.asarray(gain, dtype=float).reshape(-1)
        closed = SemiDiscreteSystem(system.A - np.outer(system.B, gain),
                                    np.zeros(system.dim), system.C, system.F, grid)
        stepper = Stepper(closed, dt, scheme)
        inputs[0] = -gain @ z
        for k in range(1, n_steps + 1):
            z = stepper.advance(z, 0.0, 0.0)
            states[k] = z
            inputs[k] = -gain @ z
    else:
        if u is None:
            u_samples = np.zeros(n_steps + 1)
        elif callable(u):
            u_samples = np.array([u(t) for t in times], dtype=float)
        else:
            u_samples = np.asarray(u, dtype=float)
            if u_samples.shape != times.shape:
                raise ValueError(
                    f"open-loop input must have {n_steps + 1} samples")
        stepper = Stepper(system, dt, scheme)
        inputs[:] = u_samples
        for k in range(1, n_steps + 1):
            z = stepper.advance(z, u_samples[k - 1], u_samples[k])
            states[k] = z

    w = energy_matrix(grid)
    energies = 0.5 * np.einsum("ti,ti->t", states @ w, states)
    return Trajectory(times, states, inputs, energies, system)


def simulate_adaptive(system, z0, dt, t_max, u=None, gain=None,
                      scheme="trapezoidal", stop_ratio=1e-12, chunk=25.0) -> Trajectory:
    """March in chunks until the running cost integrand dies out or t_max.

    The stop test compares |u|^2 + |Hdot|^2 at the current time against
    its peak over the whole run; the system is not exponentially stable,
    so t_max caps the horizon when decay is slow.
    """
    if u is not None:
        raise ValueError("adaptive horizon supports zero input or feedback only")
    grid = system.grid
    z = z0.flatten(grid) if isinstance(z0, State) else np.asarray(z0, dtype=float)
    pieces = []
    t_done = 0.0
    peak = 0.0
    while t_done < t_max:
        span = min(chunk, t_max - t_done)
        traj = simulate(system, z, span, dt, gain=gain, scheme=scheme)
        traj = Trajectory(traj.times + t_done, traj.states, traj.inputs,
                          traj.energies, system)
        pieces.append(traj)
        z = traj.states[-1]
        t_done = float(traj.times[-1])
        g = traj.inputs ** 2 + traj.outputs() ** 2
        peak = max(peak, float(g.max()))
        if peak > 0 and g[-1] <= stop_ratio * peak:
            break
    first = pieces[0]
    if len(pieces) == 1:
        return first
    times = np.concatenate([first.times] + [p.times[1:] for p in pieces[1:]])
    states = np.concatenate([first.states] + [p.states[1:] for p in pieces[1:]])
    inputs = np.concatenate([first.inputs] + [p.inputs[1:] for p in pieces[1:]])
    energies = np.concatenate([first.energies] + [p.energies[1:] for p in pieces[1:]])
    return Trajectory(times, states, inputs, energies, system)


@dataclass
class EnergyBalanceReport:
    """Step-by-step audit of the discrete energy identity.

    ``lhs`` holds the energy difference quotients, ``rhs`` the midpoint
    values of -mu*||dq/dx||^2 + u*Hdot minus the sponge sink (recorded
    separately in ``sponge_sink``).
    """

    times_mid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    sponge_sink: np.ndarray
    max_defect: float

    def to_json_dict(self) -> dict:
        return {
            "max_defect": self.max_defect,
            "mean_defect": float(np.mean(np.abs(self.lhs - self.rhs))),
            "steps": len(self.times_mid),
            "max_sponge_sink": float(self.sponge_sink.max(initial=0.0)),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


def _dissipation_terms(trajectory):
    """Per-sample (-mu*||dq/dx||^2 + u*Hdot, sponge sink) along a trajectory."""
    system = trajectory.system
    grid = system.grid
    mu = grid.params.mu
    a = grid.params.a
    xl, xr = grid.x_left, grid.x_right
    sig_l, sig_r = grid.sponge(xl), grid.sponge(xr)
    hdots = trajectory.outputs()
    n_samples = trajectory.states.shape[0]
    rate = np.empty(n_samples)
    sink = np.empty(n_samples)
    for k in range(n_samples):
        st = trajectory.state_at(k)
        gradsq = np.trapezoid(dqdx_nodal(st.q_left, grid.spacing) ** 2, xl) \
            + np.trapezoid(dqdx_nodal(st.q_right, grid.spacing) ** 2, xr) \
            + 2.0 * a * hdots[k] ** 2  # interior slope is -Hdot
        sink[k] = np.trapezoid(sig_l * st.q_left ** 2, xl) \
            + np.trapezoid(sig_r * st.q_right ** 2, xr)
        rate[k] = -mu * gradsq + trajectory.inputs[k] * hdots[k]
    return rate, sink


def energy_balance_report(trajectory: Trajectory) -> EnergyBalanceReport:
    """Compare energy difference quotients against the dissipation identity.

    The continuous identity is dE/dt = -mu*||dq/dx||^2 + u*Hdot; the
    discrete march adds the sponge sink.  The right-hand side is
    evaluated at both step endpoints and averaged, matching the order of
    the trapezoidal scheme.
    """
    dt = np.diff(trajectory.times)
    lhs = np.diff(trajectory.energies) / dt
    rate, sink = _dissipation_terms(trajectory)
    rhs = 0.5 * (rate[:-1] + rate[1:]) - 0.5 * (sink[:-1] + sink[1:])
    times_mid = 0.5 * (trajectory.times[:-1] + trajectory.times[1:])
    sink_mid = 0.5 * (sink[:-1] + sink[1:])
    max_defect = float(np.abs(lhs - rhs).max(initial=0.0))
    return EnergyBalanceReport(times_mid, lhs, rhs, sink_mid, max_defect)


@dataclass
class CostReport:
    """Quadratic cost of a run: J = int |u|^2 + |Hdot|^2 dt plus a tail fit."""

    J: float
    u_part: float
    y_part: float
    horizon: float
    tail_estimate: float

    @property
    def total(self) -> float:
        """Finite-horizon cost plus the fitted infinite-horizon remainder."""
        return self.J + self.tail_estimate

    def to_json_dict(self) -> dict:
        return {
            "J": self.J, "u_part": self.u_part, "y_part": self.y_part,
            "horizon": self.horizon, "tail_estimate": self.tail_estimate,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


def cost(trajectory: Trajectory) -> CostReport:
    """Trapezoid quadrature of the running cost, with an exponential tail fit.

    The integrand g = |u|^2 + |Hdot|^2 over the last quarter of the
    horizon is fit with a decaying exponential; a fitted growth raises
    NonDecayingTail since the horizon is then too short for the tail to
    mean anything.
    """
    t = trajectory.times
    y = trajectory.outputs()
    g = trajectory.inputs ** 2 + y ** 2
    u_part = float(np.trapezoid(trajectory.inputs ** 2, t))
    y_part = float(np.trapezoid(y ** 2, t))
    horizon = float(t[-1] - t[0])

    tail = 0.0
    j_finite = u_part + y_part
    if g.max(initial=0.0) > 0:
        sel = t >= t[0] + 0.75 * horizon
        tt, gg = t[sel], g[sel]
        # smooth over a quarter of the fit window so an oscillating
        # integrand is judged by its envelope, not its ripple
        window = max(1, gg.size // 4)
        if window > 1:
            kernel = np.full(window, 1.0 / window)
            gg = np.convolve(gg, kernel, mode="valid")
            tt = tt[window - 1:]
        pos = gg > 1e-300
        if pos.sum() >= 2:
            slope = np.polyfit(tt[pos], np.log(gg[pos]), 1)[0]
            # a fitted rise means "horizon too short" only while another
            # horizon's worth at the current level would still move J;
            # below that the residue is beat ripple of near-undamped modes
            end_level = float(g[int(0.95 * (g.size - 1)):].max())
            if slope > 1e-12 and end_level * horizon > 1e-2 * max(j_finite, 1e-300):
                raise NonDecayingTail(
                    f"running cost grows at fitted rate {slope:.3e}; extend the horizon")
            if slope < 0:
                tail = float(gg[-1] / (-slope))
    return CostReport(j_finite, u_part, y_part, horizon, tail)

"""Fixed-step trajectory integration of a malfunctioning network under
pluggable control and adversary policies.

Classical 4th-order Runge-Kutta with policies evaluated at the internal
stage states; recorded inputs are the step-start values.  Norm channels
(healthy-aggregate P-norm, malfunctioning-state P-norm, feedback
magnitude, coupling push) are recorded per step and are recomputable
from the stored states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sets
from .errors import PolicyInfeasible
from .network import PartitionedNetwork

_ZERO_NORM = 1e-12
_LS_TOL = 1e-9
_BOX_TOL = 1e-9


@dataclass
class SimContext:
    """Shared data policies may consult during a run."""

    pn: PartitionedNetwork
    Phat: np.ndarray | None = None
    P_N: np.ndarray | None = None
    K: np.ndarray | None = None
    b_min: float | None = None

    def chi_norm(self, chi: np.ndarray) -> float:
        if self.Phat is None:
            return float(np.linalg.norm(chi))
        return float(np.sqrt(max(chi @ self.Phat @ chi, 0.0)))


class Policy:
    """Base policy; subclasses emit one input vector per evaluation."""

    def control(self, t: float, X: np.ndarray, ctx: SimContext,
                w_val: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


class ConstantPolicy(Policy):
    """Fixed input, verified inside the unit hypercube at construction."""

    def __init__(self, value):
        v = np.asarray(value, dtype=float).ravel()
        if v.size and np.abs(v).max() > 1.0 + _BOX_TOL:
            raise PolicyInfeasible(f"constant input {v} outside the hypercube")
        self.value = v

    def control(self, t, X, ctx, w_val=None):
        return self.value

    def describe(self):
        return f"constant({self.value.tolist()})"


class WorstVertexPolicy(Policy):
    """Adversary pinned at the vertex attaining the worst-case residual."""

    def __init__(self, B, C, P):
        _, w = sets.z_max(B, C, P, return_vertex=True)
        self.value = np.zeros(np.atleast_2d(C).shape[1]) if w is None else w

    def control(self, t, X, ctx, w_val=None):
        return self.value

    def describe(self):
        return f"worst_vertex({self.value.tolist()})"


class BestResponsePolicy(Policy):
    """u_N minimizing ||C_N w_N + B_N u||_P against the current w_N.

    The response depends on w_N only, so solutions are cached per
    adversary value (vertex adversaries trigger a single solve)."""

    def __init__(self, P=None):
        self.P = P
        self._cache: dict[bytes, np.ndarray] = {}

    def control(self, t, X, ctx, w_val=None):
        pn = ctx.pn
        if pn.B_N.shape[1] == 0:
            return np.zeros(0)
        w_val = np.zeros(pn.p_N) if w_val is None else w_val
        key = w_val.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        P = self.P if self.P is not None else ctx.P_N
        if P is None:
            P = np.eye(pn.n_N)
        u, _ = sets._min_residual(pn.B_N, P, pn.C_N @ w_val)
        if len(self._cache) < 4096:
            self._cache[key] = u
        return u


class LinearFeedbackPolicy(Policy):
    """u_hat = -K chi; emitted unclamped, box violations are recorded by
    the simulator instead of saturated away."""

    def __init__(self, K):
        self.K = np.atleast_2d(np.asarray(K, dtype=float))

    def control(self, t, X, ctx, w_val=None):
        chi, _ = ctx.pn.split_state(X)
        return -(self.K @ chi)


class NormDirectionPolicy(Policy):
    """Constant-magnitude stabilizing drive Bhat u = -chi/||chi||_Phat * b_min.

    Requires full-row-rank Bhat; the least-squares solve is checked for
    residual and box feasibility at every evaluation (stages included)
    and raises PolicyInfeasible otherwise.  Below the zero threshold the
    drive switches to exact cancellation of the coupling push (the
    origin is maintained by best response); the mode change is recorded.
    """

    def __init__(self, b_min: float | None = None):
        self.b_min = b_min
        self.mode_change_time: float | None = None
        self._pinv: np.ndarray | None = None
        self._pinv_for: int | None = None

    def _solve(self, target, Bhat):
        if self._pinv is None or self._pinv_for != id(Bhat):
            self._pinv = np.linalg.pinv(Bhat)
            self._pinv_for = id(Bhat)
        u = self._pinv @ target
        resid = float(np.linalg.norm(Bhat @ u - target))
        return u, resid

    def maintenance_feasible(self, X, ctx) -> bool:
        pn = ctx.pn
        chi, xN = pn.split_state(X)
        target = -(pn.Ahat + pn.Dhat) @ chi - pn.D_minus_N @ xN
        u, resid = self._solve(target, pn.Bhat)
        return resid <= _LS_TOL and (u.size == 0 or np.abs(u).max() <= 1.0 + _BOX_TOL)

    def control(self, t, X, ctx, w_val=None):
        pn = ctx.pn
        chi, xN = pn.split_state(X)
        nrm = ctx.chi_norm(chi)
        if nrm <= _ZERO_NORM:
            target = -(pn.Ahat + pn.Dhat) @ chi - pn.D_minus_N @ xN
            u, resid = self._solve(target, pn.Bhat)
            if resid <= _LS_TOL and (u.size == 0 or np.abs(u).max() <= 1.0 + _BOX_TOL):
                if self.mode_change_time is None:
                    self.mode_change_time = t
                return u
            return np.zeros(pn.Bhat.shape[1])
        b = self.b_min if self.b_min is not None else (ctx.b_min or 0.0)
        target = -(chi / nrm) * b
        u, resid = self._solve(target, pn.Bhat)
        if resid > _LS_TOL:
            raise PolicyInfeasible(
                f"norm-direction target unreachable at t={t:.6f} "
                f"(residual {resid:.2e})")
        if u.size and np.abs(u).max() > 1.0 + _BOX_TOL:
            raise PolicyInfeasible(
                f"norm-direction input outside the hypercube at t={t:.6f} "
                f"(|u|_inf = {np.abs(u).max():.6f})")
        return u


@dataclass
class PolicyBundle:
    u_hat: Policy
    u_N: Policy
    w: Policy


@dataclass
class Trajectory:
    """Recorded run: uniform strictly increasing grid, states, step-start
    inputs, and derived norm channels."""

    times: np.ndarray
    states: np.ndarray
    u: np.ndarray
    w: np.ndarray
    channels: dict[str, np.ndarray]
    events: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0


def _channels_for(pn, states, Phat, P_N, K):
    chans: dict[str, np.ndarray] = {}
    nh = pn.n_healthy
    chi = states[:, :nh]
    xN = states[:, nh:]
    if Phat is not None:
        chans["chi_Pnorm"] = np.sqrt(np.maximum(
            np.einsum("ij,jk,ik->i", chi, Phat, chi), 0.0))
    if P_N is not None:
        chans["xN_Pnorm"] = np.sqrt(np.maximum(
            np.einsum("ij,jk,ik->i", xN, P_N, xN), 0.0))
        push = chi @ pn.D_N_minus.T
        chans["DNm_chi_PN_norm"] = np.sqrt(np.maximum(
            np.einsum("ij,jk,ik->i", push, P_N, push), 0.0))
    if K is not None:
        fb = chi @ np.atleast_2d(K).T
        chans["K_chi_inf"] = (np.abs(fb).max(axis=1) if fb.shape[1]
                              else np.zeros(len(states)))
    return chans


def simulate(pn: PartitionedNetwork, policies: PolicyBundle, X0, t_end: float,
             dt: float, Phat=None, P_N=None, K=None, b_min=None) -> Trajectory:
    """Integrate dX/dt = (A + D) X + B u + C w_N on a fixed grid.

    A norm-direction drive that has pushed the healthy norm below one
    step's worth of decrement (b_min * dt) lands exactly at the origin
    when the cancellation input is feasible: the continuous finite-time
    dynamics reach zero inside such a step, which a fixed-step scheme
    cannot represent by chattering.  The snap time is recorded.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    X0 = np.asarray(X0, dtype=float).ravel()
    if X0.size != pn.n_total:
        raise ValueError(f"X0 has dimension {X0.size}, expected {pn.n_total}")
    ctx = SimContext(pn=pn, Phat=Phat, P_N=P_N, K=K, b_min=b_min)
    n_steps = int(round(t_end / dt))
    times = np.arange(n_steps + 1) * dt
    A_full = pn.A + pn.D
    nh = pn.n_healthy

    def eval_inputs(t, X):
        w_val = np.asarray(policies.w.control(t, X, ctx), dtype=float).ravel()
        uN_val = np.asarray(policies.u_N.control(t, X, ctx, w_val), dtype=float).ravel()
        uh_val = np.asarray(policies.u_hat.control(t, X, ctx, w_val), dtype=float).ravel()
        return np.concatenate([uh_val, uN_val]), w_val

    def f(t, X):
        u_val, w_val = eval_inputs(t, X)
        return A_full @ X + pn.B @ u_val + pn.C @ w_val

    states = np.empty((n_steps + 1, pn.n_total))
    u_rec = np.empty((n_steps + 1, pn.B.shape[1]))
    w_rec = np.empty((n_steps + 1, pn.C.shape[1]))
    events: dict = {}
    X = X0.copy()
    snap_enabled = isinstance(policies.u_hat, NormDirectionPolicy)
    for k in range(n_steps + 1):
        t = times[k]
        if snap_enabled and "origin_snap_time" not in events:
            chi = X[:nh]
            nrm = ctx.chi_norm(chi)
            b_eff = (policies.u_hat.b_min if policies.u_hat.b_min is not None
                     else (b_min or 0.0))
            if 0.0 < nrm <= b_eff * dt and policies.u_hat.maintenance_feasible(
                    np.concatenate([np.zeros(nh), X[nh:]]), ctx):
                X = X.copy()
                X[:nh] = 0.0
                events["origin_snap_time"] = float(t)
        states[k] = X
        u_val, w_val = eval_inputs(t, X)
        u_rec[k] = u_val
        w_rec[k] = w_val
        if k == n_steps:
            break
        k1 = A_full @ X + pn.B @ u_val + pn.C @ w_val
        k2 = f(t + 0.5 * dt, X + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, X + 0.5 * dt * k2)
        k4 = f(t + dt, X + dt * k3)
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if isinstance(policies.u_hat, NormDirectionPolicy) \
            and policies.u_hat.mode_change_time is not None:
        events["norm_direction_maintenance_from"] = policies.u_hat.mode_change_time
    chans = _channels_for(pn, states, Phat, P_N, K)
    if "K_chi_inf" in chans:
        events["max_feedback_inf"] = float(chans["K_chi_inf"].max())
    return Trajectory(times=times, states=states, u=u_rec, w=w_rec,
                      channels=chans, events=events)


@dataclass(frozen=True)
class ChannelCheck:
    channel: str
    violations: int
    first_violation_time: float | None
    worst_slack: float            # max over grid of sim - bound (negative = margin)
    max_sim: float
    max_bound: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "channel": self.channel, "violations": self.violations,
            "first_violation_time": self.first_violation_time,
            "worst_slack": self.worst_slack,
            "max_sim": self.max_sim, "max_bound": self.max_bound,
        }


@dataclass(frozen=True)
class ViolationReport:
    checks: tuple[ChannelCheck, ...]
    atol: float

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def check(self, channel: str) -> ChannelCheck:
        for c in self.checks:
            if c.channel == channel:
                return c
        raise KeyError(channel)

    def to_dict(self) -> dict:
        return {"atol": self.atol, "ok": self.ok,
                "checks": [c.to_dict() for c in self.checks]}


def check_envelopes(traj: Trajectory, envelopes: dict, atol: float = 1e-6) -> ViolationReport:
    """Compare recorded channels against bounds on the same grid.

    ``envelopes`` maps channel name to either a callable (evaluated on
    the trajectory grid) or a precomputed array.  A violation is any
    grid point with sim > bound + atol.
    """
    checks = []
    for name, bound in envelopes.items():
        sim_vals = traj.channels[name]
        bound_vals = (np.asarray(bound, dtype=float) if isinstance(bound, np.ndarray)
                      else np.asarray(bound(traj.times), dtype=float))
        if bound_vals.shape != sim_vals.shape:
            raise ValueError(f"grid mismatch for channel {name}")
        with np.errstate(invalid="ignore"):
            slack = sim_vals - bound_vals
        bad = np.where(slack > atol)[0]
        checks.append(ChannelCheck(
            channel=name,
            violations=int(bad.size),
            first_violation_time=float(traj.times[bad[0]]) if bad.size else None,
            worst_slack=float(np.nanmax(slack)),
            max_sim=float(sim_vals.max()),
            max_bound=float(np.nanmax(bound_vals)) if bound_vals.size else 0.0,
        ))
    return ViolationReport(checks=tuple(checks), atol=atol)


def worst_vertex(B, C, P) -> np.ndarray:
    """The hypercube vertex attaining z_max, lexicographic first on ties."""
    _, w = sets.z_max(B, C, P, return_vertex=True)
    return w if w is not None else np.zeros(np.atleast_2d(C).shape[1])

"""Scenario file parsing, analysis orchestration, and report emission.

Scenario files are YAML with a strict schema (unknown keys rejected,
matrices as row-major nested arrays).  A run executes the requested
stages in order -- verdicts, constants, envelopes, simulation, envelope
checks -- and emits a machine-readable report plus deterministic CSVs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, bounds, sets, verdicts
from .errors import ScenarioError
from .network import LossSpec, NetworkSpec, PartitionedNetwork, Subsystem, stack_losses, apply_loss
from .sim import (BestResponsePolicy, ConstantPolicy, LinearFeedbackPolicy,
                  NormDirectionPolicy, PolicyBundle, Trajectory,
                  WorstVertexPolicy, check_envelopes, simulate)

log = logging.getLogger("resilnet")

_TOP_KEYS = {"name", "description", "subsystems", "loss", "lyapunov", "mode",
             "gain", "simulation", "analysis", "set_norm", "placeholder"}
_SUB_KEYS = {"id", "A", "B", "couplings"}
_LOSS_KEYS = {"subsystem", "actuators"}
_LYAP_KEYS = {"Q_overrides"}
_GAIN_KEYS = {"Q", "R", "K"}
_SIM_KEYS = {"X0", "t_end", "dt", "policies"}
_POLICY_KEYS = {"u_hat", "u_N", "w_N"}
_ANALYSIS_KEYS = {"verdicts", "bounds", "simulate", "check"}

ATOL_ENVELOPE = 1e-6


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in {where}")


@dataclass
class SimulationConfig:
    X0: np.ndarray | None = None
    t_end: float = 10.0
    dt: float = 1e-3
    policies: dict = field(default_factory=dict)


@dataclass
class AnalysisFlags:
    verdicts: bool = True
    bounds: bool = True
    simulate: bool = True
    check: bool = True


@dataclass
class Scenario:
    network: NetworkSpec
    loss: LossSpec
    q_overrides: dict = field(default_factory=dict)
    mode: str = "auto"                      # auto | fully_actuated | underactuated
    gain: dict = field(default_factory=dict)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    analysis: AnalysisFlags = field(default_factory=AnalysisFlags)
    set_norm: str = "euclidean"

    @property
    def name(self) -> str:
        return self.network.name


def _matrix(v, where: str) -> np.ndarray:
    try:
        m = np.array(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"matrix in {where} is not numeric: {exc}") from exc
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ScenarioError(f"matrix in {where} must be a nested (row-major) array")
    return m


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario must be a mapping (file empty?)")
    return scenario_from_dict(data, where=str(path))


def scenario_from_dict(data: dict, where: str = "scenario") -> Scenario:
    _reject_unknown(data, _TOP_KEYS, where)
    if data.get("placeholder"):
        raise ScenarioError(
            f"{where} is a placeholder: supply the linearized subsystem "
            "matrices for this scenario (they are not bundled)")
    if "subsystems" not in data or "loss" not in data:
        raise ScenarioError(f"{where}: 'subsystems' and 'loss' are required")

    subs = []
    for i, sd in enumerate(data["subsystems"]):
        wtag = f"{where}: subsystems[{i}]"
        _reject_unknown(sd, _SUB_KEYS, wtag)
        if "id" not in sd or "A" not in sd:
            raise ScenarioError(f"{wtag}: 'id' and 'A' are required")
        sid = int(sd["id"])
        A = _matrix(sd["A"], f"{wtag}.A")
        B = (_matrix(sd["B"], f"{wtag}.B") if sd.get("B") is not None
             else np.zeros((A.shape[0], 0)))
        coup = {}
        for k, Dik in (sd.get("couplings") or {}).items():
            coup[int(k)] = _matrix(Dik, f"{wtag}.couplings[{k}]")
        try:
            subs.append(Subsystem(id=sid, A=A, B=B, couplings=coup))
        except Exception as exc:
            raise ScenarioError(f"{wtag}: {exc}") from exc

    try:
        network = NetworkSpec(tuple(subs), name=str(data.get("name", "")),
                              description=str(data.get("description", "")))
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"{where}: {exc}") from exc

    losses = []
    for i, ld in enumerate(data["loss"]):
        wtag = f"{where}: loss[{i}]"
        _reject_unknown(ld, _LOSS_KEYS, wtag)
        losses.append((int(ld["subsystem"]), tuple(int(c) for c in ld["actuators"])))
    try:
        loss = LossSpec(tuple(losses))
        loss.validate_against(network)
    except ScenarioError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc

    lyap = data.get("lyapunov") or {}
    _reject_unknown(lyap, _LYAP_KEYS, f"{where}: lyapunov")
    q_overrides = {int(k): _matrix(v, f"{where}: lyapunov.Q_overrides[{k}]")
                   for k, v in (lyap.get("Q_overrides") or {}).items()}

    gain = data.get("gain") or {}
    _reject_unknown(gain, _GAIN_KEYS, f"{where}: gain")
    gain_parsed = {k: _matrix(v, f"{where}: gain.{k}") for k, v in gain.items()}

    simd = data.get("simulation") or {}
    _reject_unknown(simd, _SIM_KEYS, f"{where}: simulation")
    pol = simd.get("policies") or {}
    _reject_unknown(pol, _POLICY_KEYS, f"{where}: simulation.policies")
    sim_cfg = SimulationConfig(
        X0=None if simd.get("X0") is None else np.asarray(simd["X0"], dtype=float),
        t_end=float(simd.get("t_end", 10.0)),
        dt=float(simd.get("dt", 1e-3)),
        policies=dict(pol),
    )

    anad = data.get("analysis") or {}
    _reject_unknown(anad, _ANALYSIS_KEYS, f"{where}: analysis")
    flags = AnalysisFlags(
        verdicts=bool(anad.get("verdicts", True)),
        bounds=bool(anad.get("bounds", True)),
        simulate=bool(anad.get("simulate", True)),
        check=bool(anad.get("check", True)),
    )
    mode = str(data.get("mode", "auto"))
    if mode not in ("auto", "fully_actuated", "underactuated"):
        raise ScenarioError(f"{where}: unknown mode {mode!r}")
    set_norm = str(data.get("set_norm", "euclidean"))
    if set_norm not in ("euclidean", "lyapunov"):
        raise ScenarioError(f"{where}: unknown set_norm {set_norm!r}")
    return Scenario(network=network, loss=loss, q_overrides=q_overrides,
                    mode=mode, gain=gain_parsed, simulation=sim_cfg,
                    analysis=flags, set_norm=set_norm)


def scenario_to_dict(sc: Scenario) -> dict:
    """Serializable echo of a scenario with defaults filled in."""
    return {
        "name": sc.network.name,
        "description": sc.network.description,
        "subsystems": [
            {
                "id": s.id,
                "A": s.A.tolist(),
                "B": s.B.tolist(),
                "couplings": {k: v.tolist() for k, v in sorted(s.couplings.items())},
            }
            for s in sc.network.subsystems
        ],
        "loss": [{"subsystem": sid, "actuators": list(cols)}
                 for sid, cols in sc.loss.losses],
        "lyapunov": {"Q_overrides": {k: v.tolist()
                                     for k, v in sorted(sc.q_overrides.items())}},
        "mode": sc.mode,
        "gain": {k: v.tolist() for k, v in sorted(sc.gain.items())},
        "simulation": {
            "X0": None if sc.simulation.X0 is None else sc.simulation.X0.tolist(),
            "t_end": sc.simulation.t_end,
            "dt": sc.simulation.dt,
            "policies": sc.simulation.policies,
        },
        "analysis": {
            "verdicts": sc.analysis.verdicts, "bounds": sc.analysis.bounds,
            "simulate": sc.analysis.simulate, "check": sc.analysis.check,
        },
        "set_norm": sc.set_norm,
    }


def emit_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)


def _q_for(sc: Scenario, stacked: NetworkSpec) -> tuple[np.ndarray, np.ndarray]:
    """(Q_N, Qhat) from per-subsystem overrides, identity elsewhere.

    Qhat is the block diagonal of the healthy subsystems' overrides; the
    stacked malfunctioning subsystem takes the block diagonal of its
    members' overrides.
    """
    healthy = stacked.subsystems[:-1]
    lossy = stacked.subsystems[-1]
    blocks = []
    for s in healthy:
        q = sc.q_overrides.get(s.id, np.eye(s.n))
        if q.shape != (s.n, s.n):
            raise ScenarioError(f"Q override for subsystem {s.id} has wrong shape")
        blocks.append(q)
    nh = sum(s.n for s in healthy)
    Qhat = np.zeros((nh, nh))
    off = 0
    for q in blocks:
        Qhat[off:off + q.shape[0], off:off + q.shape[0]] = q
        off += q.shape[0]
    Q_N = sc.q_overrides.get(lossy.id, np.eye(lossy.n))
    if Q_N.shape != (lossy.n, lossy.n):
        raise ScenarioError(f"Q override for subsystem {lossy.id} has wrong shape")
    return Q_N, Qhat


def _build_policy(name_or_dict, role: str, pn: PartitionedNetwork, bp, PN_set):
    if isinstance(name_or_dict, dict):
        if set(name_or_dict) == {"constant"}:
            return ConstantPolicy(name_or_dict["constant"])
        raise ScenarioError(f"unknown policy spec {name_or_dict!r} for {role}")
    name = str(name_or_dict)
    if name == "zero":
        dim = {"u_hat": pn.Bhat.shape[1], "u_N": pn.B_N.shape[1],
               "w_N": pn.p_N}[role]
        return ConstantPolicy(np.zeros(dim))
    if name == "norm_direction":
        return NormDirectionPolicy(b_min=bp.b_min if bp is not None else None)
    if name == "linear_feedback":
        if bp is None or bp.K is None:
            raise ScenarioError("linear_feedback policy needs a synthesized gain")
        return LinearFeedbackPolicy(bp.K)
    if name == "best_response":
        return BestResponsePolicy()
    if name == "worst_vertex":
        return WorstVertexPolicy(pn.B_N, pn.C_N, PN_set)
    raise ScenarioError(f"unknown policy {name!r} for {role}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        rows = len(columns[0])
        for i in range(rows):
            fh.write(",".join(_fmt(c[i]) for c in columns) + "\n")


@dataclass
class ReportBundle:
    scenario: dict
    permutation: list[int]
    mode: str
    verdicts: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    finite_time: dict | None = None
    admissibility: dict | None = None
    envelopes: dict = field(default_factory=dict)
    violations: dict | None = None
    events: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations is None or self.violations.get("ok", True)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario, "permutation": self.permutation,
            "mode": self.mode, "verdicts": self.verdicts,
            "constants": self.constants, "finite_time": self.finite_time,
            "admissibility": self.admissibility, "envelopes": self.envelopes,
            "violations": self.violations, "events": self.events,
            "provenance": self.provenance,
        }


@dataclass
class RunResult:
    report: ReportBundle
    pn: PartitionedNetwork
    bp: bounds.BoundParams | None = None
    trajectory: Trajectory | None = None
    envelopes: dict = field(default_factory=dict)


def run(sc: Scenario, outdir=None, envelope_scale: float = 1.0) -> RunResult:
    """Execute the requested stages and emit report + CSVs into outdir.

    ``envelope_scale`` scales every envelope before checking; values
    below 1 inject artificial violations (fault-injection testing only).
    """
    stacked, stacked_loss, perm = stack_losses(sc.network, sc.loss)
    pn = apply_loss(stacked, stacked_loss, tuple(perm))
    flags = sc.analysis
    mode = sc.mode
    if mode == "auto":
        full = np.linalg.matrix_rank(pn.Bhat) == pn.n_healthy
        mode = "fully_actuated" if full else "underactuated"

    report = ReportBundle(
        scenario=scenario_to_dict(sc), permutation=list(perm), mode=mode,
        provenance={
            "tool": "resilnet", "version": __version__,
            "set_norm": sc.set_norm, "dt": sc.simulation.dt,
            "envelope_atol": ATOL_ENVELOPE, "envelope_scale": envelope_scale,
        })
    result = RunResult(report=report, pn=pn)

    if flags.verdicts:
        log.info("stage: verdicts")
        Z_N = sets.build_Z(pn.B_N, pn.C_N)
        report.verdicts = {
            "network_stabilizable": verdicts.network_stabilizable(pn).to_dict(),
            "sufficient_network_conditions":
                verdicts.sufficient_network_conditions(pn).to_dict(),
            "malfunctioning_full_dim":
                verdicts.resilient_full_dim(pn.A_N, pn.B_N, pn.C_N, zset=Z_N).to_dict(),
            "malfunctioning_NS":
                verdicts.resilient_NS(pn.A_N, pn.B_N, pn.C_N).to_dict(),
            "network_resiliently_stabilizable":
                verdicts.network_resiliently_stabilizable(pn, Z_N=Z_N).to_dict(),
        }

    need_bounds = flags.bounds or flags.simulate or flags.check
    bp = None
    env_chi = env_xN_closed = None
    if need_bounds:
        log.info("stage: constants (%s)", mode)
        Q_N, Qhat = _q_for(sc, stacked)
        X0 = sc.simulation.X0
        if X0 is None:
            X0 = np.zeros(pn.n_total)
        if X0.size != pn.n_total:
            raise ScenarioError(
                f"X0 has dimension {X0.size}, expected {pn.n_total}")
        chi0, xN0 = X0[: pn.n_healthy], X0[pn.n_healthy:]
        if mode == "fully_actuated":
            bp = bounds.constants_fully_actuated(
                pn, Q_N=Q_N, Qhat=Qhat, chi0=chi0, xN0=xN0, set_norm=sc.set_norm)
            report.finite_time = bounds.finite_time_verdict(bp).to_dict()
        else:
            K = sc.gain.get("K")
            if K is None:
                K = bounds.synthesize_gain(pn, Q=sc.gain.get("Q"),
                                           R=sc.gain.get("R"))
            bp = bounds.constants_underactuated(
                pn, K=K, Q_N=Q_N, Qhat=Qhat, chi0=chi0, xN0=xN0,
                set_norm=sc.set_norm)
            report.admissibility = bounds.admissibility_underactuated(bp).to_dict()
        result.bp = bp
        report.constants = bp.to_dict()
        if bp.K is not None:
            report.constants["K"] = bp.K.tolist()

        if mode == "fully_actuated":
            env_chi = bounds.chi_envelope(bp)
        else:
            env_chi = bounds.chi_envelope_underactuated(bp)
        report.envelopes["chi_zero_time"] = env_chi.zero_time
        result.envelopes["chi"] = env_chi

    traj = None
    if flags.simulate:
        log.info("stage: simulate")
        pol_cfg = dict(sc.simulation.policies)
        if "u_hat" not in pol_cfg:
            pol_cfg["u_hat"] = ("norm_direction" if mode == "fully_actuated"
                                else "linear_feedback")
        if "u_N" not in pol_cfg:
            pol_cfg["u_N"] = "best_response"
        if "w_N" not in pol_cfg:
            pol_cfg["w_N"] = "worst_vertex"
        PN_set = np.eye(pn.n_N) if sc.set_norm == "euclidean" else bp.P_N
        bundle = PolicyBundle(
            u_hat=_build_policy(pol_cfg["u_hat"], "u_hat", pn, bp, PN_set),
            u_N=_build_policy(pol_cfg["u_N"], "u_N", pn, bp, PN_set),
            w=_build_policy(pol_cfg["w_N"], "w_N", pn, bp, PN_set),
        )
        report.scenario["simulation"]["policies"] = {
            "u_hat": bundle.u_hat.describe(), "u_N": bundle.u_N.describe(),
            "w_N": bundle.w.describe()}
        X0 = sc.simulation.X0
        if X0 is None:
            X0 = np.zeros(pn.n_total)
        traj = simulate(pn, bundle, X0, sc.simulation.t_end, sc.simulation.dt,
                        Phat=bp.Phat, P_N=bp.P_N, K=bp.K, b_min=bp.b_min)
        result.trajectory = traj
        report.events = {k: v for k, v in traj.events.items()}

    violations = None
    env_cols: dict[str, np.ndarray] = {}
    if traj is not None and need_bounds:
        chi_zero = traj.events.get("origin_snap_time")
        if chi_zero is None:
            nrm = traj.channels.get("chi_Pnorm")
            if nrm is not None:
                below = np.where(nrm <= 1e-9)[0]
                chi_zero = float(traj.times[below[0]]) if below.size else None
        if chi_zero is None:
            chi_zero = env_chi.zero_time
        if mode == "fully_actuated":
            env_xN_closed = bounds.xN_closed_envelope(bp, chi_zero_time=chi_zero)
        else:
            env_xN_closed = bounds.xN_closed_envelope_underactuated(bp)
        result.envelopes["xN_closed"] = env_xN_closed
        report.envelopes["xN_switch_time"] = env_xN_closed.switch_time
        report.envelopes["xN_branch_switches"] = env_xN_closed.switch_count

        xN_int = bounds.xN_integral_bound(traj, bp)
        env_cols = {
            "env_chi": envelope_scale * np.asarray(env_chi(traj.times)),
            "env_xN_int": envelope_scale * xN_int,
            "env_xN_closed": envelope_scale * np.asarray(env_xN_closed(traj.times)),
        }
        result.envelopes["xN_int"] = xN_int
        if flags.check:
            log.info("stage: check")
            vr = check_envelopes(traj, {
                "chi_Pnorm": env_cols["env_chi"],
                "xN_Pnorm": env_cols["env_xN_int"],
            }, atol=ATOL_ENVELOPE)
            vr2 = check_envelopes(traj, {
                "xN_Pnorm": env_cols["env_xN_closed"],
            }, atol=ATOL_ENVELOPE)
            violations = {
                "ok": vr.ok and vr2.ok,
                "chi_vs_envelope": vr.check("chi_Pnorm").to_dict(),
                "xN_vs_integral": vr.check("xN_Pnorm").to_dict(),
                "xN_vs_closed": vr2.check("xN_Pnorm").to_dict(),
            }
            report.violations = violations

    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True,
                       default=_json_default) + "\n")
        if bp is not None:
            names, vals = zip(*sorted(
                (k, v) for k, v in bp.to_dict().items()
                if isinstance(v, (int, float)) and not isinstance(v, bool)))
            with open(outdir / "constants.csv", "w", newline="\n") as fh:
                fh.write("name,value\n")
                for n, v in zip(names, vals):
                    fh.write(f"{n},{_fmt(v)}\n")
        if traj is not None:
            header = ["t"]
            cols: list[np.ndarray] = [traj.times]
            for j in range(traj.states.shape[1]):
                header.append(f"x_{j+1}")
                cols.append(traj.states[:, j])
            for j in range(traj.u.shape[1]):
                header.append(f"u_{j+1}")
                cols.append(traj.u[:, j])
            for j in range(traj.w.shape[1]):
                header.append(f"w_{j+1}")
                cols.append(traj.w[:, j])
            for name in ("chi_Pnorm", "xN_Pnorm"):
                if name in traj.channels:
                    header.append(name)
                    cols.append(traj.channels[name])
            for name in ("env_chi", "env_xN_int", "env_xN_closed"):
                if name in env_cols:
                    header.append(name)
                    cols.append(env_cols[name])
            if "K_chi_inf" in traj.channels:
                header.append("K_chi_inf")
                cols.append(traj.channels["K_chi_inf"])
            _write_csv(outdir / "trajectory.csv", header, cols)
    return result


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and (np.isnan(o) or np.isinf(o)):
        return repr(o)
    raise TypeError(f"not JSON serializable: {type(o)}")

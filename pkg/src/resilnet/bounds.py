"""Destabilization bounds for a network that lost control authority
over a nonresilient trailing subsystem.

The machinery turns two Lyapunov certificates (malfunctioning subsystem
and healthy remainder) plus coupling gains into closed-form envelopes
for ``||chi(t)||_Phat`` and ``||x_N(t)||_P_N`` via a scalar
comparison-lemma argument.  The constant bundle is

* ``alpha``, ``alpha_N``  -- Lyapunov decay rates of the healthy
  aggregate and the malfunctioning subsystem,
* ``gamma``, ``gamma_N``  -- cross-norm gains of the interconnection
  blocks,
* ``z_max``  -- worst-case residual input magnitude after best-response
  counteraction in the malfunctioning subsystem,
* ``b_min``  -- guaranteed stabilizing control floor of the healthy
  aggregate on its input-hypercube boundary (0 in underactuated mode),

and the envelope coefficients ``r_pm, p, h_pm`` solve the second-order
comparison ODE; the regime is degenerate when
``alpha * alpha_N = gamma * gamma_N``, where the particular solution
gains a term linear in t.

Note on ``z_max`` and ``b_min``: the published workflow this toolbox
reproduces evaluates both magnitudes in the Euclidean norm even though
the envelope algebra is written in the Lyapunov norms.  The default
``set_norm="euclidean"`` follows that convention so reported constants match
the published values; ``set_norm="lyapunov"`` evaluates both in the
corresponding P-norms, which is the variant with an end-to-end
domination guarantee for arbitrary instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import sets
from .errors import NotControllable, NotFullRowRank, RiccatiFailure
from .margins import (check_spd, is_hurwitz, p_norm, pbh_controllable,
                      solve_lyapunov, spectral_abscissa)
from .network import PartitionedNetwork
from .verdicts import Conclusion, Evidence, Sufficiency, Verdict

DEGENERATE_REL_TOL = 1e-12
NEAR_DEGENERATE_REL_TOL = 1e-6


@dataclass(frozen=True)
class BoundParams:
    """Constant bundle parameterizing the destabilization envelopes."""

    alpha: float
    alpha_N: float
    gamma: float
    gamma_N: float
    z_max: float
    b_min: float
    r_plus: float
    r_minus: float
    p: float
    h_plus: float
    h_minus: float
    regime: str                  # "generic" | "degenerate"
    mode: str                    # "fully_actuated" | "underactuated"
    chi0_norm: float
    xN0_norm: float
    diverging: bool
    near_degenerate: bool
    set_norm: str
    P_N: np.ndarray
    Q_N: np.ndarray
    Phat: np.ndarray
    Qhat: np.ndarray
    K: np.ndarray | None = None
    resilient_already: bool = False

    @property
    def gamma_gammaN(self) -> float:
        return self.gamma * self.gamma_N

    @property
    def alpha_alphaN(self) -> float:
        return self.alpha * self.alpha_N

    @property
    def lam_min_Phat(self) -> float:
        return float(np.linalg.eigvalsh(self.Phat)[0])

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "alpha_N": self.alpha_N,
            "gamma": self.gamma, "gamma_N": self.gamma_N,
            "gamma_gammaN": self.gamma_gammaN, "alpha_alphaN": self.alpha_alphaN,
            "z_max": self.z_max, "b_min": self.b_min,
            "r_plus": self.r_plus, "r_minus": self.r_minus,
            "p": self.p, "h_plus": self.h_plus, "h_minus": self.h_minus,
            "regime": self.regime, "mode": self.mode,
            "chi0_norm": self.chi0_norm, "xN0_norm": self.xN0_norm,
            "diverging": self.diverging, "near_degenerate": self.near_degenerate,
            "set_norm": self.set_norm,
            "resilient_already": self.resilient_already,
        }


def solve_bound_coefficients(alpha: float, alpha_N: float, gamma: float,
                             gamma_N: float, z_max: float, b_min: float,
                             chi0_norm: float, xN0_norm: float
                             ) -> tuple[str, float, float, float, float, float, bool]:
    """Roots, particular constant and initial-condition coefficients of
    the comparison ODE  s'' + (alpha - alpha_N) s' - gamma gamma_N s =
    (gamma z_max - alpha_N b_min) e^(alpha_N t).

    Returns (regime, r_plus, r_minus, p, h_plus, h_minus, near_degenerate).
    The h system is solved numerically so the stated initial-condition
    identities hold to machine precision in both regimes.
    """
    gg = gamma * gamma_N
    aa = alpha * alpha_N
    scale = max(aa, gg, 1e-300)
    degenerate = abs(aa - gg) <= DEGENERATE_REL_TOL * scale
    near = abs(aa - gg) <= NEAR_DEGENERATE_REL_TOL * scale
    disc = np.sqrt((alpha - alpha_N) ** 2 + 4.0 * gg)
    r_plus = 0.5 * (alpha_N - alpha + disc)
    r_minus = 0.5 * (alpha_N - alpha - disc)
    forcing = gamma * z_max - alpha_N * b_min
    rhs2 = (alpha_N - alpha) * chi0_norm - b_min + gamma * xN0_norm
    if degenerate:
        p = forcing / (alpha + alpha_N)
        M = np.array([[1.0, 1.0], [alpha_N, -alpha]])
        h = np.linalg.solve(M, np.array([chi0_norm, rhs2 - p]))
        return "degenerate", r_plus, r_minus, p, float(h[0]), float(h[1]), near
    p = forcing / (aa - gg)
    M = np.array([[1.0, 1.0], [r_plus, r_minus]])
    h = np.linalg.solve(M, np.array([chi0_norm - p, rhs2 - alpha_N * p]))
    return "generic", r_plus, r_minus, p, float(h[0]), float(h[1]), near


def _set_norm_matrices(pn: PartitionedNetwork, P_N, Phat, set_norm: str):
    if set_norm == "euclidean":
        return np.eye(pn.n_N), np.eye(pn.n_healthy)
    if set_norm == "lyapunov":
        return P_N, Phat
    raise ValueError(f"unknown set_norm {set_norm!r}")


def _gamma_pair(pn: PartitionedNetwork, Phat, P_N) -> tuple[float, float]:
    from .margins import gamma_gain
    g = gamma_gain(pn.D_minus_N, Phat, P_N) if np.any(pn.D_minus_N) else 0.0
    gN = gamma_gain(pn.D_N_minus, P_N, Phat) if np.any(pn.D_N_minus) else 0.0
    return g, gN


def constants_fully_actuated(pn: PartitionedNetwork,
                             P_N=None, Q_N=None, Phat=None, Qhat=None,
                             chi0=None, xN0=None,
                             set_norm: str = "euclidean") -> BoundParams:
    """Constant bundle for the full-actuation analysis.

    Lyapunov pairs default to Q = I solves on A_N and Ahat + Dhat;
    passing P explicitly skips the solve (its Q must accompany it).
    chi0 / xN0 are initial-state vectors (default zero).
    """
    if Q_N is None:
        Q_N = np.eye(pn.n_N)
    if Qhat is None:
        Qhat = np.eye(pn.n_healthy)
    if P_N is None:
        P_N = solve_lyapunov(pn.A_N, Q_N).P
    else:
        P_N = check_spd(P_N, "P_N")
    if Phat is None:
        Phat = solve_lyapunov(pn.Ahat + pn.Dhat, Qhat).P
    else:
        Phat = check_spd(Phat, "Phat")
    if np.linalg.matrix_rank(pn.Bhat) < pn.n_healthy:
        raise NotFullRowRank("the healthy actuation Bhat must have full row rank")

    alpha_N = float(np.linalg.eigvalsh(Q_N)[0] / (2 * np.linalg.eigvalsh(P_N)[-1]))
    alpha = float(np.linalg.eigvalsh(Qhat)[0] / (2 * np.linalg.eigvalsh(Phat)[-1]))
    gamma, gamma_N = _gamma_pair(pn, Phat, P_N)
    PN_set, Phat_set = _set_norm_matrices(pn, P_N, Phat, set_norm)
    z = sets.z_max(pn.B_N, pn.C_N, PN_set)
    b = sets.b_min(pn.Bhat, Phat_set)
    resilient_already = sets.contains_negCW_in_BU(pn.B_N, pn.C_N)

    chi0 = np.zeros(pn.n_healthy) if chi0 is None else np.asarray(chi0, float).ravel()
    xN0 = np.zeros(pn.n_N) if xN0 is None else np.asarray(xN0, float).ravel()
    chi0_norm = p_norm(chi0, Phat)
    xN0_norm = p_norm(xN0, P_N)

    regime, r_p, r_m, p, h_p, h_m, near = solve_bound_coefficients(
        alpha, alpha_N, gamma, gamma_N, z, b, chi0_norm, xN0_norm)
    diverging = gamma * gamma_N > alpha * alpha_N and regime == "generic"
    return BoundParams(
        alpha=alpha, alpha_N=alpha_N, gamma=gamma, gamma_N=gamma_N,
        z_max=z, b_min=b, r_plus=r_p, r_minus=r_m, p=p,
        h_plus=h_p, h_minus=h_m, regime=regime, mode="fully_actuated",
        chi0_norm=chi0_norm, xN0_norm=xN0_norm, diverging=diverging,
        near_degenerate=near, set_norm=set_norm,
        P_N=P_N, Q_N=Q_N, Phat=Phat, Qhat=Qhat,
        resilient_already=resilient_already)


def synthesize_gain(pn: PartitionedNetwork, Q=None, R=None) -> np.ndarray:
    """Stabilizing state-feedback gain for (Ahat + Dhat, Bhat) from the
    continuous algebraic Riccati equation with identity default weights.
    """
    A = pn.Ahat + pn.Dhat
    B = pn.Bhat
    n, m = B.shape
    # PBH test: the Krylov controllability matrix is numerically useless
    # beyond desk scale (column norms ~ ||A||^(n-1)).  The Riccati solve
    # needs stabilizability; very stable nearly-uncontrollable modes are
    # accepted and the closed loop is certified Hurwitz below.
    if not pbh_controllable(A, B, stabilizable_only=True):
        raise NotControllable("(Ahat + Dhat, Bhat) is not stabilizable")
    Q = np.eye(n) if Q is None else check_spd(Q, "Q")
    R = np.eye(m) if R is None else check_spd(R, "R")
    try:
        S = sla.solve_continuous_are(A, B, Q, R)
    except Exception as exc:  # scipy raises LinAlgError on failure
        raise RiccatiFailure(str(exc)) from exc
    K = np.linalg.solve(R, B.T @ S)
    if not is_hurwitz(A - B @ K):
        raise RiccatiFailure(
            f"closed loop abscissa {spectral_abscissa(A - B @ K):.3e} not stable")
    return K


def constants_underactuated(pn: PartitionedNetwork, K=None,
                            P_N=None, Q_N=None, Qhat=None,
                            chi0=None, xN0=None,
                            set_norm: str = "euclidean") -> BoundParams:
    """Constant bundle under linear feedback u_hat = -K chi.

    Phat certifies the closed loop Ahat + Dhat - Bhat K; b_min is zero
    (no guaranteed control floor without full actuation).  When
    gamma gamma_N >= alpha alpha_N the constants are still returned with
    the Diverging flag raised: the envelopes grow without bound.
    """
    if K is None:
        K = synthesize_gain(pn)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if Q_N is None:
        Q_N = np.eye(pn.n_N)
    if Qhat is None:
        Qhat = np.eye(pn.n_healthy)
    if P_N is None:
        P_N = solve_lyapunov(pn.A_N, Q_N).P
    else:
        P_N = check_spd(P_N, "P_N")
    Acl = pn.Ahat + pn.Dhat - pn.Bhat @ K
    Phat = solve_lyapunov(Acl, Qhat).P

    alpha_N = float(np.linalg.eigvalsh(Q_N)[0] / (2 * np.linalg.eigvalsh(P_N)[-1]))
    alpha = float(np.linalg.eigvalsh(Qhat)[0] / (2 * np.linalg.eigvalsh(Phat)[-1]))
    gamma, gamma_N = _gamma_pair(pn, Phat, P_N)
    PN_set, _ = _set_norm_matrices(pn, P_N, Phat, set_norm)
    z = sets.z_max(pn.B_N, pn.C_N, PN_set)
    resilient_already = sets.contains_negCW_in_BU(pn.B_N, pn.C_N)

    chi0 = np.zeros(pn.n_healthy) if chi0 is None else np.asarray(chi0, float).ravel()
    xN0 = np.zeros(pn.n_N) if xN0 is None else np.asarray(xN0, float).ravel()
    chi0_norm = p_norm(chi0, Phat)
    xN0_norm = p_norm(xN0, P_N)

    regime, r_p, r_m, p, h_p, h_m, near = solve_bound_coefficients(
        alpha, alpha_N, gamma, gamma_N, z, 0.0, chi0_norm, xN0_norm)
    diverging = (gamma * gamma_N >= alpha * alpha_N - DEGENERATE_REL_TOL *
                 max(alpha * alpha_N, gamma * gamma_N))
    return BoundParams(
        alpha=alpha, alpha_N=alpha_N, gamma=gamma, gamma_N=gamma_N,
        z_max=z, b_min=0.0, r_plus=r_p, r_minus=r_m, p=p,
        h_plus=h_p, h_minus=h_m, regime=regime, mode="underactuated",
        chi0_norm=chi0_norm, xN0_norm=xN0_norm, diverging=diverging,
        near_degenerate=near, set_norm=set_norm,
        P_N=P_N, Q_N=Q_N, Phat=Phat, Qhat=Qhat, K=K,
        resilient_already=resilient_already)


def finite_time_verdict(bp: BoundParams) -> Verdict:
    """Finite-time resilient stabilizability of the healthy aggregate:
    coupling product at most the stability product, and the stabilizing
    floor strictly dominating the worst-case disturbance push."""
    gg, aa = bp.gamma_gammaN, bp.alpha_alphaN
    push = bp.gamma * bp.z_max
    floor = bp.alpha_N * bp.b_min
    c1 = gg <= aa
    c2 = push < floor
    basis = (
        Evidence("coupling_vs_stability", c1, value=gg, threshold=aa,
                 note="gamma*gamma_N <= alpha*alpha_N"),
        Evidence("disturbance_vs_floor", c2, value=push, threshold=floor,
                 note="gamma*z_max < alpha_N*b_min"),
    )
    concl = Conclusion.RESILIENTLY_STABILIZABLE if (c1 and c2) else Conclusion.NOT_DETERMINED
    return Verdict(concl, basis, Sufficiency.SUFFICIENT_ONLY)


class Envelope:
    """A closed-form bound t -> value with branch bookkeeping.

    ``switch_time`` marks the single allowed branch change (the healthy
    state reaching the origin); evaluation never interpolates across it.
    ``zero_time`` is the first zero crossing when the envelope is
    latched at zero afterwards.
    """

    def __init__(self, fn, kind: str, regime: str,
                 switch_time: float | None = None,
                 zero_time: float | None = None,
                 branch_fn=None, description: str = ""):
        self._fn = fn
        self.kind = kind
        self.regime = regime
        self.switch_time = switch_time
        self.zero_time = zero_time
        self._branch_fn = branch_fn or (lambda t: np.zeros_like(np.asarray(t, int)))
        self.description = description

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            out = self._fn(t_arr)
        return out if np.ndim(t) else float(out)

    def branch(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self._branch_fn(t_arr)
        return out if np.ndim(t) else int(out)

    @property
    def switch_count(self) -> int:
        return 0 if self.switch_time is None else 1


def _chi_raw(bp: BoundParams):
    if bp.regime == "degenerate":
        slope = (bp.gamma * bp.z_max - bp.alpha_N * bp.b_min) / (bp.alpha + bp.alpha_N)

        def raw(t):
            return (slope * t + bp.h_plus
                    + bp.h_minus * np.exp(-(bp.alpha + bp.alpha_N) * t))
    else:
        a_p, a_m = bp.r_plus - bp.alpha_N, bp.r_minus - bp.alpha_N

        def raw(t):
            return (bp.p + bp.h_plus * np.exp(a_p * t)
                    + bp.h_minus * np.exp(a_m * t))
    return raw


def _first_zero(raw, t_hi_start: float, latched: bool) -> float | None:
    """First root of raw(t) = 0 on t >= 0 by bracketing + bisection to
    1e-10 time resolution; None when no crossing is found."""
    if raw(0.0) <= 0.0:
        return 0.0
    t_hi = t_hi_start
    for _ in range(80):
        if raw(t_hi) <= 0.0:
            break
        t_hi *= 2.0
    else:
        return None
    lo, hi = 0.0, t_hi
    # tighten lo: largest grid point with raw > 0 below hi
    grid = np.linspace(0.0, hi, 257)
    vals = np.array([raw(g) for g in grid])
    pos = np.where(vals > 0.0)[0]
    if pos.size:
        lo = grid[pos[-1]]
        hi = grid[min(pos[-1] + 1, 256)]
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if raw(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi_envelope(bp: BoundParams) -> Envelope:
    """Envelope of ||chi(t)||_Phat: max{0, closed form}; once zero is
    reached with the finite-time conditions satisfied, the envelope
    stays latched at zero."""
    raw = _chi_raw(bp)
    ft = finite_time_verdict(bp) if bp.mode == "fully_actuated" else None
    latch = ft is not None and ft.positive
    scale = 1.0 / max(bp.alpha, 1e-6)
    zero_t = _first_zero(raw, scale, latch) if latch else None

    def fn(t):
        v = np.maximum(0.0, raw(t))
        if zero_t is not None:
            v = np.where(np.asarray(t) >= zero_t, 0.0, v)
        return v

    return Envelope(fn, kind="chi", regime=bp.regime, zero_time=zero_t,
                    description="healthy-aggregate norm bound")


def _phi(r: float, t, alpha_N: float):
    """exp(-alpha_N t) * (exp(r t) - 1) / r, stable for r near 0 (expm1
    forms) and for large positive exponents (no inf * 0)."""
    t = np.asarray(t, dtype=float)
    if abs(r) < 1e-300:
        return t * np.exp(-alpha_N * t)
    if r > 0.0:
        return -np.exp((r - alpha_N) * t) * np.expm1(-r * t) / r
    return np.exp(-alpha_N * t) * np.expm1(r * t) / r


def _M_of(bp: BoundParams):
    """The accumulated-coupling term M(t) of the x_N closed-form bound."""
    z, b = bp.z_max, bp.b_min
    aN, a = bp.alpha_N, bp.alpha
    gN = bp.gamma_N
    if bp.regime == "degenerate":
        c1 = gN * bp.h_plus + (aN * z + gN * b) / (a + aN)
        c2 = (a * z - gN * b) / (a + aN)

        def M(t):
            return ((1.0 - np.exp(-aN * t)) / aN * c1 + c2 * t
                    + (gN * bp.h_minus / a) * (1.0 - np.exp(-a * t)) * np.exp(-aN * t))
    else:
        lead = (a * z - gN * b) / (bp.alpha_alphaN - bp.gamma_gammaN)

        def M(t):
            return (lead * (1.0 - np.exp(-aN * t))
                    + gN * bp.h_plus * _phi(bp.r_plus, t, aN)
                    + gN * bp.h_minus * _phi(bp.r_minus, t, aN))
    return M


def xN_closed_envelope(bp: BoundParams,
                       chi_zero_time: float | None = None) -> Envelope:
    """Closed-form bound on ||x_N(t)||_P_N.

    Before the healthy state reaches the origin the bound accumulates
    the worst-case coupling through M(t); afterwards it relaxes toward
    z_max / alpha_N.  The post-switch branch re-anchors at the certified
    pre-switch bound value (not at the initial state), which keeps the
    bound valid by the semigroup property of the integral bound; the
    branch change is reported, never interpolated.
    """
    M = _M_of(bp)
    aN, z = bp.alpha_N, bp.z_max

    def pre(t):
        return np.maximum(0.0, np.exp(-aN * t) * bp.xN0_norm + M(t))

    t_s = chi_zero_time
    if t_s is None:
        def fn(t):
            return pre(t)

        def branch_fn(t):
            return np.zeros_like(np.asarray(t, dtype=int))
        return Envelope(fn, kind="xN_closed", regime=bp.regime,
                        description="malfunctioning-state closed bound")

    V_s = float(pre(np.asarray(t_s)))

    def fn(t):
        t = np.asarray(t, dtype=float)
        post = z / aN + (V_s - z / aN) * np.exp(-aN * (t - t_s))
        return np.where(t < t_s, pre(t), post)

    def branch_fn(t):
        return (np.asarray(t, dtype=float) >= t_s).astype(int)

    return Envelope(fn, kind="xN_closed", regime=bp.regime,
                    switch_time=t_s, branch_fn=branch_fn,
                    description="malfunctioning-state closed bound "
                                "(re-anchored at the switch)")


def xN_closed_envelope_underactuated(bp: BoundParams,
                                     chi_zero_time: float | None = None) -> Envelope:
    """Underactuated variant (b_min = 0); no switch by default since the
    linear feedback never certifies chi = 0.  A caller supplying a
    simulation-certified chi_zero_time activates the relaxation branch.
    """
    return xN_closed_envelope(bp, chi_zero_time=chi_zero_time)


def chi_envelope_underactuated(bp: BoundParams) -> Envelope:
    """b(t) = p + h+ e^((r+-aN)t) + h- e^((r--aN)t), clamped below at 0;
    no zero latch (boundedness only, no finite-time claim)."""
    raw = _chi_raw(bp)

    def fn(t):
        return np.maximum(0.0, raw(t))

    return Envelope(fn, kind="chi_under", regime=bp.regime,
                    description="healthy-aggregate norm bound under linear feedback")


@dataclass(frozen=True)
class AdmissibilityReport:
    """Analytic supremum analysis of the underactuated envelope b(t) and
    the sufficient admissibility check sup b <= sqrt(lam_min Phat)/||K||."""

    sup_b: float
    sup_at: float                   # time of the supremum (inf when diverging)
    interior_critical_time: float | None
    interior_critical_value: float | None
    threshold: float
    sufficient_pass: bool

    def to_dict(self) -> dict:
        return {
            "sup_b": self.sup_b, "sup_at": self.sup_at,
            "interior_critical_time": self.interior_critical_time,
            "interior_critical_value": self.interior_critical_value,
            "threshold": self.threshold,
            "sufficient_pass": self.sufficient_pass,
        }


def admissibility_underactuated(bp: BoundParams) -> AdmissibilityReport:
    """Supremum of b(t) over [0, inf), computed from the closed form.

    b is a constant plus two exponentials: its supremum is at t = 0, at
    the unique interior critical point (when h+ h- have opposite signs),
    or in the limit t -> inf; no sampling involved.
    """
    if bp.K is None:
        raise ValueError("underactuated admissibility needs the gain K")
    a_p, a_m = bp.r_plus - bp.alpha_N, bp.r_minus - bp.alpha_N
    b0 = bp.p + bp.h_plus + bp.h_minus
    crit_t = crit_v = None
    if bp.regime == "generic":
        ratio = -(bp.h_minus * a_m) / (bp.h_plus * a_p) \
            if bp.h_plus * a_p != 0.0 else -1.0
        if ratio > 0.0 and a_p != a_m:
            t_c = float(np.log(ratio) / (a_p - a_m))
            if t_c > 0.0:
                crit_t = t_c
                crit_v = float(bp.p + bp.h_plus * np.exp(a_p * t_c)
                               + bp.h_minus * np.exp(a_m * t_c))
        if a_p > 0.0 and bp.h_plus > 0.0:
            sup_b, sup_at = np.inf, np.inf
        else:
            limit = bp.p if a_p < 0.0 else bp.p + bp.h_plus
            cands = [(b0, 0.0), (limit, np.inf)]
            if crit_t is not None:
                cands.append((crit_v, crit_t))
            sup_b, sup_at = max(cands, key=lambda c: c[0])
    else:
        slope = bp.gamma * bp.z_max / (bp.alpha + bp.alpha_N)
        if slope > 0.0:
            sup_b, sup_at = np.inf, np.inf
        else:
            sup_b, sup_at = b0, 0.0
    K_norm = float(np.linalg.norm(bp.K, 2))
    threshold = float(np.sqrt(bp.lam_min_Phat) / K_norm) if K_norm > 0 else np.inf
    return AdmissibilityReport(
        sup_b=float(sup_b), sup_at=float(sup_at),
        interior_critical_time=crit_t, interior_critical_value=crit_v,
        threshold=threshold, sufficient_pass=bool(sup_b <= threshold))


def xN_integral_bound(traj, bp: BoundParams,
                      dnm_chi_norm=None) -> np.ndarray:
    """Integral bound on ||x_N(t)||_P_N along a recorded trajectory:
    exp(-aN t) (||x_N(0)|| + int_0^t exp(aN tau) beta(tau) dtau) with
    beta = z_max + ||D_N- chi||_P_N, trapezoidal on the trajectory grid.

    Evaluated with an exponentially weighted recurrence so large aN * t
    cannot overflow.  ``dnm_chi_norm`` overrides the trajectory channel.
    """
    times = np.asarray(traj.times, dtype=float)
    if dnm_chi_norm is None:
        dnm_chi_norm = traj.channels["DNm_chi_PN_norm"]
    beta = bp.z_max + np.asarray(dnm_chi_norm, dtype=float)
    aN = bp.alpha_N
    out = np.empty_like(times)
    out[0] = bp.xN0_norm
    integ = 0.0
    head = bp.xN0_norm
    for k in range(1, times.size):
        dt = times[k] - times[k - 1]
        decay = np.exp(-aN * dt)
        integ = decay * integ + 0.5 * dt * (decay * beta[k - 1] + beta[k])
        head = decay * head
        out[k] = head + integ
    return out

"""Stabilizability and resilience decision procedures.

Each procedure returns a Verdict carrying the conclusion, a list of
evidence entries (condition name, pass/fail, computed quantity and
threshold), and whether the test applied was an equivalence or only a
sufficient condition.  Failures of sufficient conditions never produce
a Negative conclusion, only NotDetermined.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import margins, sets
from .network import PartitionedNetwork

EIG_TOL = 1e-9
MU_SAFETY = 0.95  # strict-margin factor on the estimated distance to uncontrollability


class Conclusion(str, Enum):
    STABILIZABLE = "Stabilizable"
    CONTROLLABLE = "Controllable"
    RESILIENTLY_STABILIZABLE = "ResilientlyStabilizable"
    RESILIENT = "Resilient"
    NOT_DETERMINED = "NotDetermined"
    NEGATIVE = "Negative"


class Sufficiency(str, Enum):
    NECESSARY_AND_SUFFICIENT = "NecessaryAndSufficient"
    SUFFICIENT_ONLY = "SufficientOnly"


@dataclass(frozen=True)
class Evidence:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    note: str = ""
    witness: np.ndarray | None = None


@dataclass(frozen=True)
class Verdict:
    conclusion: Conclusion
    basis: tuple[Evidence, ...]
    sufficiency: Sufficiency

    def evidence(self, name: str) -> Evidence:
        for e in self.basis:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def positive(self) -> bool:
        return self.conclusion in (
            Conclusion.STABILIZABLE, Conclusion.CONTROLLABLE,
            Conclusion.RESILIENTLY_STABILIZABLE, Conclusion.RESILIENT)

    def to_dict(self) -> dict:
        return {
            "conclusion": self.conclusion.value,
            "sufficiency": self.sufficiency.value,
            "basis": [
                {
                    "name": e.name, "passed": bool(e.passed),
                    "value": None if e.value is None else float(e.value),
                    "threshold": None if e.threshold is None else float(e.threshold),
                    "note": e.note,
                }
                for e in self.basis
            ],
        }


def sontag(A, B, cube: sets.Hypercube | None = None) -> Verdict:
    """Bounded-input stabilizability when 0 is interior to the input set:
    equivalent to full controllability rank plus no eigenvalue in the
    open right half plane; controllability further pins Re(lambda) = 0.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]
    cube = cube or sets.Hypercube(B.shape[1])
    rank = margins.ctrb_rank(A, B)
    absc = margins.spectral_abscissa(A)
    eig_real = np.linalg.eigvals(A).real
    on_axis = bool(np.all(np.abs(eig_real) <= EIG_TOL))
    basis = [
        Evidence("interior_input_set", cube.dim >= 1, value=float(cube.dim)),
        Evidence("controllability_rank", rank == n, value=float(rank), threshold=float(n)),
        Evidence("spectral_abscissa", absc <= EIG_TOL, value=absc, threshold=EIG_TOL),
        Evidence("eigenvalues_on_axis", on_axis, value=float(np.max(np.abs(eig_real)))),
    ]
    if cube.dim < 1 or rank < n or absc > EIG_TOL:
        concl = Conclusion.NEGATIVE
    elif on_axis:
        concl = Conclusion.CONTROLLABLE
    else:
        concl = Conclusion.STABILIZABLE
    return Verdict(concl, tuple(basis), Sufficiency.NECESSARY_AND_SUFFICIENT)


def brammer(A, B) -> Verdict:
    """Sontag's conditions plus the eigenvector test: no real eigenvector
    v of A' may satisfy v'Bu <= 0 on the whole cube, i.e. the support
    sum |v'B_j| must be positive (the test is sign-symmetric in v)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    base = sontag(A, B)
    worst = None
    witness = None
    for v in margins.real_eigenvectors(A.T):
        h = float(np.sum(np.abs(v @ B))) if B.shape[1] else 0.0
        if worst is None or h < worst:
            worst, witness = h, v
    ev_pass = worst is None or worst > EIG_TOL
    basis = base.basis + (
        Evidence("eigenvector_support", ev_pass,
                 value=worst, threshold=EIG_TOL, witness=witness,
                 note="min over real eigenvectors v of A' of sum_j |v'B_j|"),)
    concl = base.conclusion if ev_pass else Conclusion.NEGATIVE
    return Verdict(concl, basis, Sufficiency.NECESSARY_AND_SUFFICIENT)


def resilient_full_dim(A, B, C, zset: sets.ZSet | None = None) -> Verdict:
    """Full-dimensional control set shortcut: when Z has nonempty
    interior, resilient stabilizability reduces to the eigenvalue sign
    condition alone.  Defers to the span test when dim(Z) < n."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    zset = zset if zset is not None else sets.build_Z(B, C)
    n = A.shape[0]
    absc = margins.spectral_abscissa(A)
    eig_real = np.linalg.eigvals(A).real
    on_axis = bool(np.all(np.abs(eig_real) <= EIG_TOL))
    full = zset.full_dim
    basis = (
        Evidence("Z_full_dimensional", full, value=float(zset.dim), threshold=float(n)),
        Evidence("spectral_abscissa", absc <= EIG_TOL, value=absc, threshold=EIG_TOL),
        Evidence("eigenvalues_on_axis", on_axis, value=float(np.max(np.abs(eig_real)))),
    )
    if not full:
        return Verdict(Conclusion.NOT_DETERMINED, basis,
                       Sufficiency.SUFFICIENT_ONLY)
    if absc > EIG_TOL:
        concl = Conclusion.NEGATIVE
    elif on_axis:
        concl = Conclusion.RESILIENT
    else:
        concl = Conclusion.RESILIENTLY_STABILIZABLE
    return Verdict(concl, basis, Sufficiency.NECESSARY_AND_SUFFICIENT)


def resilient_NS(A, B, C, zset: sets.ZSet | None = None) -> Verdict:
    """Equivalence test on the span of the control set Z: eigenvalue
    signs, controllability of (A, Z), and positive support of Z along
    every real eigenvector of A'.

    The span basis is certified from below, so a pass with agreeing
    support computations is an equivalence; disagreement downgrades the
    verdict's sufficiency.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    eigvecs = margins.real_eigenvectors(A.T)
    if zset is None:
        zset = sets.build_Z(B, C, extra_directions=eigvecs)
    absc = margins.spectral_abscissa(A)
    eig_real = np.linalg.eigvals(A).real
    on_axis = bool(np.all(np.abs(eig_real) <= EIG_TOL))
    basis: list[Evidence] = [
        Evidence("spectral_abscissa", absc <= EIG_TOL, value=absc, threshold=EIG_TOL),
        Evidence("Z_nonempty", zset.zero_in,
                 note="0 in Z iff -CW subset BU (empty Z blocks any counteraction)"),
    ]
    agreed = True
    if zset.empty:
        basis.append(Evidence("controllability_rank_AZ", False, value=0.0,
                              threshold=float(n), note="empty control set"))
        return Verdict(Conclusion.NEGATIVE, tuple(basis),
                       Sufficiency.NECESSARY_AND_SUFFICIENT)
    rank = margins.ctrb_rank(A, zset.span_basis)
    rank_ok = rank == n
    witness = None
    if not rank_ok:
        Cm = margins.ctrb(A, zset.span_basis)
        u_svd, s_svd, _ = np.linalg.svd(np.hstack([Cm, np.zeros((n, 1))]))
        witness = u_svd[:, -1]
    basis.append(Evidence("controllability_rank_AZ", rank_ok, value=float(rank),
                          threshold=float(n), witness=witness))
    ev_pass = True
    worst = None
    ev_witness = None
    for v in eigvecs:
        sup, ok = sets.support_Z(v, zset)
        sup_m, ok_m = sets.support_Z(-v, zset)
        agreed = agreed and ok and ok_m
        s_val = max(sup, sup_m)
        if worst is None or s_val < worst:
            worst, ev_witness = s_val, v
        if s_val <= EIG_TOL:
            ev_pass = False
    basis.append(Evidence("eigenvector_support_Z", ev_pass, value=worst,
                          threshold=EIG_TOL, witness=ev_witness))
    suff = (Sufficiency.NECESSARY_AND_SUFFICIENT if agreed
            else Sufficiency.SUFFICIENT_ONLY)
    if absc > EIG_TOL or not rank_ok or not ev_pass:
        return Verdict(Conclusion.NEGATIVE, tuple(basis), suff)
    concl = Conclusion.RESILIENT if on_axis else Conclusion.RESILIENTLY_STABILIZABLE
    basis.append(Evidence("eigenvalues_on_axis", on_axis,
                          value=float(np.max(np.abs(eig_real)))))
    return Verdict(concl, tuple(basis), suff)


def _full_row_rank(M: np.ndarray) -> bool:
    if M.shape[1] < M.shape[0] or M.size == 0:
        return M.shape[0] == 0
    return int(np.linalg.matrix_rank(M)) == M.shape[0]


def _subsystem_input_blocks(pn: PartitionedNetwork) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Per-subsystem (id, A_i, full input block) from the partition,
    re-joining retained and lost columns for the trailing subsystem."""
    Bbar = np.hstack([pn.B, pn.C])
    out = []
    for sid, sl in pn.state_ids:
        rows = Bbar[sl, :]
        cols = np.where(np.any(rows != 0.0, axis=0))[0]
        out.append((sid, pn.A[sl, sl], rows[:, cols]))
    return out


def network_stabilizable(pn: PartitionedNetwork) -> Verdict:
    """Pre-loss network stabilizability: Sontag test on (A + D, Bbar)."""
    Bbar = np.hstack([pn.B, pn.C])
    return sontag(pn.A + pn.D, Bbar)


def sufficient_network_conditions(pn: PartitionedNetwork) -> Verdict:
    """Four sufficient coupling-size routes to network stabilizability:
    (a) every subsystem fully actuated; (b) the coupling factors through
    the actuation as state feedback with controllable pairs; (c) the
    coupling norm is below the (safety-discounted) estimated distance to
    uncontrollability; (d) below the real-stability-radius lower bound.
    (a|b|c) supply the rank condition and (d) the eigenvalue condition.
    """
    blocks = _subsystem_input_blocks(pn)
    Bbar = np.hstack([pn.B, pn.C])
    normD = float(np.linalg.norm(pn.D, 2))

    a_ok = all(_full_row_rank(Bi) for _, _, Bi in blocks)

    F, *_ = np.linalg.lstsq(Bbar, pn.D, rcond=None)
    resid = float(np.linalg.norm(Bbar @ F - pn.D, 2))
    pairs_ok = all(margins.ctrb_rank(Ai, Bi) == Ai.shape[0] for _, Ai, Bi in blocks)
    b_ok = resid <= 1e-9 and pairs_ok

    mu_est = margins.distance_to_uncontrollability(pn.A, Bbar)
    c_ok = normD < MU_SAFETY * mu_est

    hurwitz_A = margins.is_hurwitz(pn.A)
    r_lb = margins.real_stability_radius_lb(pn.A) if hurwitz_A else 0.0
    d_ok = hurwitz_A and normD < r_lb

    basis = (
        Evidence("a_full_row_rank_blocks", a_ok),
        Evidence("b_feedback_factorization", b_ok, value=resid, threshold=1e-9,
                 note="needs controllable pairs too" if not pairs_ok else ""),
        Evidence("c_coupling_below_mu", c_ok, value=normD,
                 threshold=MU_SAFETY * mu_est,
                 note="mu is a grid estimate (upper bound of the true margin); "
                      "compared with a 5% safety factor"),
        Evidence("d_coupling_below_r_real", d_ok, value=normD, threshold=r_lb),
    )
    if (a_ok or b_ok or c_ok) and d_ok:
        return Verdict(Conclusion.STABILIZABLE, basis, Sufficiency.SUFFICIENT_ONLY)
    return Verdict(Conclusion.NOT_DETERMINED, basis, Sufficiency.SUFFICIENT_ONLY)


def network_resiliently_stabilizable(pn: PartitionedNetwork,
                                     Z_N: sets.ZSet | None = None,
                                     Z_net: sets.ZSet | None = None) -> Verdict:
    """Sufficient resilient-stabilizability tests for the whole network.

    Route 1 (full actuation): healthy blocks full row rank, the
    malfunctioning subsystem's control set full-dimensional, and the
    coupling below the stability radius of A.  Route 2 (span route):
    coupling below both the stability radius and the estimated distance
    to uncontrollability of (A, span Z), and no real eigenvector of
    (A+D)' orthogonal-or-opposed to Z.
    """
    if Z_N is None:
        Z_N = sets.build_Z(pn.B_N, pn.C_N)
    blocks = _subsystem_input_blocks(pn)
    healthy_full = all(_full_row_rank(Bi) for _, _, Bi in blocks[:-1])
    normD = float(np.linalg.norm(pn.D, 2))
    hurwitz_A = margins.is_hurwitz(pn.A)
    r_lb = margins.real_stability_radius_lb(pn.A) if hurwitz_A else 0.0

    ZN_full = Z_N.full_dim
    p5 = healthy_full and ZN_full and hurwitz_A and normD < r_lb

    if Z_net is None:
        healthy_B = [Bi for _, _, Bi in blocks[:-1]]
        Z_net = sets.product_Z(healthy_B, Z_N)
    mu_Z = (margins.distance_to_uncontrollability(pn.A, Z_net.span_basis)
            if Z_net.span_basis.shape[1] else 0.0)
    margin = MU_SAFETY * min(r_lb, mu_Z)
    ev_pass = True
    worst = None
    if not Z_net.empty:
        for v in margins.real_eigenvectors((pn.A + pn.D).T):
            sup_p, _ = sets.support_Z(v, Z_net)
            sup_m, _ = sets.support_Z(-v, Z_net)
            s_val = max(sup_p, sup_m)
            worst = s_val if worst is None else min(worst, s_val)
            if s_val <= EIG_TOL:
                ev_pass = False
    else:
        ev_pass = False
    p6 = (not Z_net.empty) and normD < margin and ev_pass

    basis = (
        Evidence("p5_healthy_full_row_rank", healthy_full),
        Evidence("p5_ZN_full_dimensional", ZN_full, value=float(Z_N.dim),
                 threshold=float(pn.n_N)),
        Evidence("p5_coupling_below_r_real", hurwitz_A and normD < r_lb,
                 value=normD, threshold=r_lb),
        Evidence("p6_coupling_below_margins", normD < margin, value=normD,
                 threshold=margin,
                 note="min of r_real lower bound and estimated mu(A, span Z), "
                      "with 5% safety factor"),
        Evidence("p6_eigenvector_support_Z", ev_pass, value=worst,
                 threshold=EIG_TOL),
    )
    if p5 or p6:
        return Verdict(Conclusion.RESILIENTLY_STABILIZABLE, basis,
                       Sufficiency.SUFFICIENT_ONLY)
    return Verdict(Conclusion.NOT_DETERMINED, basis, Sufficiency.SUFFICIENT_ONLY)

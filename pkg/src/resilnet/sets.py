"""Geometry of hypercube input sets and their matrix images.

Everything here is exact-by-construction where possible: membership in
``B * [-1,1]^m`` is a bounded-variable linear feasibility problem, the
worst-case residual ``z_max`` is a vertex-outer / convex-inner min-max,
and the control set ``Z = {z in BU : z - Cw in BU for all w}`` is probed
with certified points only (bisection along candidate directions), so
the reported span dimension is a lower bound of the true one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySetError, NotFullRowRank, TooManyVertices
from .margins import check_spd

VERTEX_CAP = 20
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Hypercube:
    """[-1, 1]^dim; dim = 0 is the singleton containing the empty vector."""

    dim: int

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dim must be >= 0")

    def vertex_count(self) -> int:
        return 1 if self.dim == 0 else 2 ** self.dim


def cube_vertices(p: int) -> np.ndarray:
    """All vertices of [-1,1]^p, first vertex all ones.

    Enumeration order is fixed (bit k of the index flips coordinate k to
    -1) so that ties in vertex optimizations break deterministically.
    """
    if p > VERTEX_CAP:
        raise TooManyVertices(f"2^{p} vertices exceed the cap (p <= {VERTEX_CAP})")
    if p == 0:
        return np.zeros((1, 0))
    idx = np.arange(2 ** p)[:, None]
    bits = (idx >> np.arange(p)[None, :]) & 1
    return 1.0 - 2.0 * bits


@dataclass(frozen=True)
class ZonotopeImage:
    """The image B * [-1,1]^m with exact support h(d) = sum_j |d' G_j|."""

    G: np.ndarray

    def support(self, d) -> float:
        d = np.asarray(d, dtype=float).ravel()
        if self.G.shape[1] == 0:
            return 0.0
        return float(np.sum(np.abs(d @ self.G)))


def member_BU(z, B, tol: float = FEAS_TOL) -> bool:
    """True iff some u in [-1,1]^m satisfies Bu = z.

    Bounded-variable feasibility solved as the box-constrained least
    squares min_u ||Bu - z||; membership iff the optimal residual is
    below tol (scaled by |z|_inf).  The active-set polish inside the QP
    solver makes the residual exact to machine precision, so the test
    behaves like a phase-1 feasibility program.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    z = np.asarray(z, dtype=float).ravel()
    n, m = B.shape
    if z.size != n:
        raise ValueError("z dimension does not match B rows")
    scale = max(1.0, float(np.abs(z).max(initial=0.0)))
    if m == 0:
        return bool(np.abs(z).max(initial=0.0) <= tol * scale)
    u0, *_ = np.linalg.lstsq(B, z, rcond=None)
    if np.abs(u0).max(initial=0.0) <= 1.0:
        return bool(np.linalg.norm(B @ u0 - z) <= tol * scale)
    _, resid = _box_lsq(B, z, x0=np.clip(u0, -1.0, 1.0))
    return bool(resid <= tol * scale)


def _box_lsq(A, y, fixed: dict[int, float] | None = None,
             tol: float = 1e-9, max_iter: int = 60,
             x0: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Minimize ||A u - y|| over [-1,1]^m with optional pinned coords.

    Accelerated projected gradient for a warm start, then a primal
    active-set loop whose free-coordinate subproblems are solved as
    least squares on A itself (no normal-equation cancellation), so
    pinned-vertex solutions come out exact.  Returns (u, residual norm).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    m = A.shape[1]
    fixed = fixed or {}
    lo = np.full(m, -1.0)
    hi = np.full(m, 1.0)
    for j, v in fixed.items():
        lo[j] = hi[j] = v

    def proj(u):
        return np.clip(u, lo, hi)

    def resid(u):
        return float(np.linalg.norm(A @ u - y))

    u = proj(np.zeros(m) if x0 is None else np.asarray(x0, dtype=float).ravel())
    if m == 0:
        return u, resid(u)

    H = A.T @ A
    g = -(A.T @ y)
    lam = np.linalg.eigvalsh(H)
    L = max(float(lam[-1]), 1e-14)
    step = 1.0 / L

    def fval(v):
        return 0.5 * v @ H @ v + g @ v

    yk = u.copy()
    t_mom = 1.0
    f_prev = fval(u)
    for _ in range(max_iter):
        u_new = proj(yk - step * (H @ yk + g))
        f_new = fval(u_new)
        if f_new > f_prev:                      # adaptive restart
            yk = u.copy()
            t_mom = 1.0
            u_new = proj(yk - step * (H @ yk + g))
            f_new = fval(u_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
        yk = u_new + ((t_mom - 1.0) / t_new) * (u_new - u)
        converged = abs(f_prev - f_new) <= tol * max(1.0, abs(f_new))
        u, f_prev, t_mom = u_new, f_new, t_new
        if converged:
            break

    # primal active-set polish: least-squares solves on the free
    # coordinates, growing the working set one bound at a time and
    # releasing bounds whose multiplier has the wrong sign
    kkt_tol = 1e-10 * max(1.0, float(np.abs(A).max(initial=0.0)) ** 2)
    active: dict[int, float] = dict(fixed)
    grad = H @ u + g
    for j in range(m):
        if j in active:
            continue
        if u[j] >= hi[j] - 1e-9 and grad[j] <= 0.0:
            active[j] = hi[j]
        elif u[j] <= lo[j] + 1e-9 and grad[j] >= 0.0:
            active[j] = lo[j]
    best_u, best_r = u.copy(), resid(u)
    for _ in range(6 * m + 30):
        free = np.array([j not in active for j in range(m)])
        u_new = np.array([active.get(j, 0.0) for j in range(m)])
        if np.any(free):
            rhs = y - A[:, ~free] @ u_new[~free]
            sol, *_ = np.linalg.lstsq(A[:, free], rhs, rcond=None)
            u_new[free] = sol
        over = (u_new - hi) * free
        under = (lo - u_new) * free
        worst_j = int(np.argmax(np.maximum(over, under)))
        worst = max(over[worst_j], under[worst_j])
        if worst > 1e-12:
            active[worst_j] = hi[worst_j] if over[worst_j] >= under[worst_j] \
                else lo[worst_j]
            continue
        u_new = proj(u_new)
        r_new = resid(u_new)
        if r_new < best_r:
            best_u, best_r = u_new.copy(), r_new
        grad = H @ u_new + g
        release = None
        release_mag = kkt_tol
        for j, bound in active.items():
            if j in fixed:
                continue
            mag = grad[j] if bound == hi[j] else -grad[j]
            if mag > release_mag:
                release, release_mag = j, mag
        if release is None:
            break
        del active[release]
    return best_u, best_r


def _min_residual(B, P, c) -> tuple[np.ndarray, float]:
    """min over u in the cube of ||c + Bu||_P; returns (u*, value).

    Factoring P = L L' turns the problem into plain box least squares
    on (L'B, -L'c)."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    if B.shape[1] == 0:
        return np.zeros(0), float(np.sqrt(max(c @ P @ c, 0.0)))
    L = np.linalg.cholesky(np.asarray(P, dtype=float))
    return _box_lsq(L.T @ B, -(L.T @ c))


def contains_negCW_in_BU(B, C) -> bool:
    """True iff -Cw lies in B[-1,1]^m for every w in [-1,1]^p.

    By convexity the hypercube vertices suffice; p is capped at 20.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if B.shape[0] != C.shape[0]:
        raise ValueError("B and C row dimensions differ")
    for w in cube_vertices(C.shape[1]):
        if not member_BU(-C @ w, B):
            return False
    return True


def z_max(B, C, P, return_vertex: bool = False):
    """Worst-case residual max over w-vertices of min_u ||Cw + Bu||_P.

    The inner minimization is a box-constrained convex quadratic; the
    outer maximum of the convex function w -> min_u ||Cw + Bu||_P over
    the hypercube is attained at a vertex.  The first maximizing vertex
    in the fixed enumeration order is reported on ties.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    P = check_spd(P)
    best_val = -1.0
    best_w = None
    for w in cube_vertices(C.shape[1]):
        _, val = _min_residual(B, P, C @ w)
        if val > best_val + 1e-12:
            best_val, best_w = val, w
    best_val = max(best_val, 0.0)
    if return_vertex:
        return best_val, best_w
    return best_val


def z_prime(B, C, P, tol: float = 1e-6, max_iter: int = 5000) -> float:
    """min over u of max over w-vertices of ||Cw + Bu||_P (adversary
    reacts to the controller).

    Projected subgradient descent on the pointwise max of convex norms;
    always >= z_max, which is asserted.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    P = check_spd(P)
    W = cube_vertices(C.shape[1])
    CW = W @ C.T                     # rows: Cw per vertex

    def g_of(u):
        r = CW + u @ B.T
        vals = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", r, P, r), 0.0))
        k = int(np.argmax(vals))
        return float(vals[k]), k, r[k]

    m = B.shape[1]
    if m == 0:
        return g_of(np.zeros(0))[0]
    u = np.zeros(m)
    best_u, best_val = u.copy(), g_of(u)[0]
    scale = max(1.0, float(np.linalg.norm(B, 2)))
    for it in range(1, max_iter + 1):
        val, _, rk = g_of(u)
        if val < best_val:
            best_val, best_u = val, u.copy()
        if val <= 1e-14:
            break
        sub = B.T @ P @ rk / val
        u = np.clip(u - (1.0 / (scale * np.sqrt(it))) * sub, -1.0, 1.0)
    val = g_of(best_u)[0]
    zm = z_max(B, C, P)
    if val < zm - 1e-8:
        raise ArithmeticError(
            f"z' = {val:.3e} fell below z_max = {zm:.3e}; solver inconsistency")
    return max(val, zm)


def b_min(B, P) -> float:
    """min over the hypercube boundary of ||Bu||_P for full-row-rank B.

    Per face (one coordinate pinned to +/-1) the remaining coordinates
    solve a box-constrained convex quadratic; the minimum over the 2m
    faces is returned.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    P = check_spd(P)
    n, m = B.shape
    if m > VERTEX_CAP:
        raise TooManyVertices(f"face loop over {2*m} faces exceeds the cap")
    if np.linalg.matrix_rank(B) < n:
        raise NotFullRowRank("b_min requires B with full row rank")
    L = np.linalg.cholesky(np.asarray(P, dtype=float))
    A_ls = L.T @ B
    best = np.inf
    for j in range(m):
        for s in (+1.0, -1.0):
            _, r = _box_lsq(A_ls, np.zeros(A_ls.shape[0]), fixed={j: s})
            best = min(best, r)
    return best


@dataclass(frozen=True)
class ZSet:
    """The control set Z = {z in BU : z - Cw in BU for all w in W}.

    ``span_basis`` columns are certified points of Z (membership-tested)
    and linearly independent; ``dim`` counts them, a lower bound of the
    true dimension.  ``zero_in`` records whether 0 is a member, which by
    central symmetry is equivalent to Z being nonempty.  For Cartesian
    products of subsystem sets, ``dim`` is the sum of factor dimensions
    (the structural span) even when one factor is empty.
    """

    B: np.ndarray
    C: np.ndarray
    span_basis: np.ndarray
    dim: int
    zero_in: bool
    support_agrees: bool = True

    @property
    def empty(self) -> bool:
        return not self.zero_in

    @property
    def full_dim(self) -> bool:
        return self.zero_in and self.dim == self.B.shape[0]

    def contains(self, z, tol: float = FEAS_TOL) -> bool:
        return member_Z(z, self.B, self.C, tol=tol)


def member_Z(z, B, C, tol: float = FEAS_TOL) -> bool:
    """z in Z iff z - Cw in BU at every w-vertex (convexity in w; the
    vertex pair +/-w also forces z itself into BU)."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    z = np.asarray(z, dtype=float).ravel()
    for w in cube_vertices(C.shape[1]):
        if not member_BU(z - C @ w, B, tol=tol):
            return False
    return True


def _independent_columns(M: np.ndarray) -> np.ndarray:
    """Greedy rank-revealing selection of independent columns of M."""
    if M.shape[1] == 0:
        return M
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > max(M.shape) * s[0] * 1e-12)) if s[0] > 0 else 0
    chosen: list[int] = []
    for j in range(M.shape[1]):
        trial = M[:, chosen + [j]]
        sv = np.linalg.svd(trial, compute_uv=False)
        if sv[-1] > max(trial.shape) * sv[0] * 1e-10:
            chosen.append(j)
        if len(chosen) == rank:
            break
    return M[:, chosen]


def _ray_extent(d, B, C, iters: int = 16) -> float:
    """sup { t >= 0 : t d in Z } by bisection along direction d."""
    d = np.asarray(d, dtype=float).ravel()
    dd = float(d @ d)
    if dd <= 0.0:
        return 0.0
    hB = ZonotopeImage(B).support(d)
    t_hi = hB / dd if dd > 0 else 0.0
    if t_hi <= 0.0:
        return 0.0
    if member_Z(t_hi * d, B, C):
        return t_hi
    lo, hi = 0.0, t_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if member_Z(mid * d, B, C):
            lo = mid
        else:
            hi = mid
    return lo


def build_Z(B, C, extra_directions=None, rng_seed: int = 12345) -> ZSet:
    """Probe Z along candidate directions and collect a certified span.

    Candidates: columns of B, their pairwise sums and differences, 2n
    seeded random directions, plus any caller-supplied extras.  Each
    direction with positive bisection extent contributes one certified
    point; a pivoted reduction keeps an independent subset.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if B.shape[0] != C.shape[0]:
        raise ValueError("B and C row dimensions differ")
    n = B.shape[0]
    zero_in = member_Z(np.zeros(n), B, C)

    cands: list[np.ndarray] = []
    cols = [B[:, j] for j in range(B.shape[1]) if np.linalg.norm(B[:, j]) > 0]
    cands.extend(cols)
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            cands.append(cols[i] + cols[j])
            cands.append(cols[i] - cols[j])
    rng = np.random.default_rng(rng_seed)
    for _ in range(2 * n):
        cands.append(rng.standard_normal(n))
    if extra_directions is not None:
        cands.extend(np.asarray(d, dtype=float).ravel() for d in extra_directions)

    points = []
    if zero_in:
        for d in cands:
            nrm = np.linalg.norm(d)
            if nrm < 1e-12:
                continue
            d = d / nrm
            t = _ray_extent(d, B, C)
            if t > 1e-9:
                points.append(t * d)
    basis = _independent_columns(np.column_stack(points)) if points else np.zeros((n, 0))
    return ZSet(B=B, C=C, span_basis=basis, dim=basis.shape[1], zero_in=zero_in)


def product_Z(healthy_B: list[np.ndarray], Z_N: ZSet) -> ZSet:
    """Cartesian product B1*U1 x ... x B(N-1)*U(N-1) x Z_N as a ZSet.

    The product's (B, C) are the assembled network matrices, so the
    generic membership test applies unchanged; the span basis is the
    block-diagonal stack of per-factor bases.  ``dim`` sums the factor
    dimensions; ``zero_in`` is False when Z_N is empty, making the
    product itself empty.
    """
    blocks_B = [np.atleast_2d(np.asarray(b, dtype=float)) for b in healthy_B]
    n_h = sum(b.shape[0] for b in blocks_B)
    n_N = Z_N.B.shape[0]
    n = n_h + n_N
    m = sum(b.shape[1] for b in blocks_B) + Z_N.B.shape[1]
    B = np.zeros((n, m))
    ro = co = 0
    factor_bases = []
    for b in blocks_B:
        B[ro:ro + b.shape[0], co:co + b.shape[1]] = b
        bb = _independent_columns(b)
        blk = np.zeros((n, bb.shape[1]))
        blk[ro:ro + b.shape[0], :] = bb
        factor_bases.append(blk)
        ro += b.shape[0]
        co += b.shape[1]
    B[ro:, co:] = Z_N.B
    C = np.zeros((n, Z_N.C.shape[1]))
    C[ro:, :] = Z_N.C
    blk = np.zeros((n, Z_N.span_basis.shape[1]))
    blk[ro:, :] = Z_N.span_basis
    factor_bases.append(blk)
    basis = np.hstack(factor_bases) if factor_bases else np.zeros((n, 0))
    return ZSet(B=B, C=C, span_basis=basis,
                dim=basis.shape[1], zero_in=Z_N.zero_in)


def support_Z(d, zset: ZSet, tol: float = 1e-7):
    """max over z in Z of d'z.

    Two computations: the zonotope support difference
    h_BU(d) - h_CW(d) (exact when the erosion is tight along d) and the
    certified ray extent along d.  On agreement the support difference
    is returned; otherwise the certified (lower-bound) value, flagged by
    the second return element.
    """
    d = np.asarray(d, dtype=float).ravel()
    if not np.any(d):
        raise ValueError("direction must be nonzero")
    if zset.empty:
        raise EmptySetError("support query on an empty control set")
    upper = ZonotopeImage(zset.B).support(d) - ZonotopeImage(zset.C).support(d)
    lower = _ray_extent(d, zset.B, zset.C) * float(d @ d)
    if abs(upper - lower) <= tol * max(1.0, abs(upper), abs(lower)):
        return upper, True
    return lower, False

"""Network data model: subsystems, loss specifications, stacking of
multiple malfunctioning subsystems, and global block-matrix assembly.

A network is a list of subsystems ``dx_i/dt = A_i x_i + B_i u_i +
sum_k D[i,k] x_k`` with inputs confined to unit hypercubes.  A loss of
control authority hands some actuator columns of one or more subsystems
to an adversary; the partitioned form separates the (reordered, merged)
malfunctioning subsystem from the healthy remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ScenarioError


def _mat(a, rows=None, cols=None, what="matrix") -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1) if rows == 1 else m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"{what} must be 2-D")
    if rows is not None and m.shape[0] != rows:
        raise DimensionMismatch(f"{what} has {m.shape[0]} rows, expected {rows}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionMismatch(f"{what} has {m.shape[1]} columns, expected {cols}")
    return m


@dataclass(frozen=True)
class Subsystem:
    """One node: square dynamics A, actuation B (columns in [-1,1] each),
    couplings D[id -> neighbor] with matching dimensions."""

    id: int
    A: np.ndarray
    B: np.ndarray
    couplings: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        A = _mat(self.A, what=f"A of subsystem {self.id}")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A of subsystem {self.id} is not square")
        B = _mat(self.B, rows=A.shape[0], what=f"B of subsystem {self.id}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "couplings", dict(self.couplings))
        if self.id in self.couplings:
            raise ScenarioError(f"subsystem {self.id} couples to itself")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered collection of subsystems; order is authoritative for all
    global-coordinate bookkeeping."""

    subsystems: tuple[Subsystem, ...]
    name: str = ""
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        ids = [s.id for s in self.subsystems]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate subsystem ids")
        if len(ids) < 2:
            raise ScenarioError("a network needs at least 2 subsystems")
        dims = {s.id: s.n for s in self.subsystems}
        any_coupling = False
        for s in self.subsystems:
            for k, Dik in s.couplings.items():
                if k not in dims:
                    raise ScenarioError(
                        f"subsystem {s.id} couples to unknown subsystem {k}")
                D = _mat(Dik, rows=s.n, cols=dims[k],
                         what=f"coupling D[{s.id},{k}]")
                s.couplings[k] = D
                if np.any(D):
                    any_coupling = True
        if not any_coupling:
            raise ScenarioError("network has no nonzero coupling (D = 0)")

    def subsystem(self, sid: int) -> Subsystem:
        for s in self.subsystems:
            if s.id == sid:
                return s
        raise KeyError(sid)

    @property
    def ids(self) -> list[int]:
        return [s.id for s in self.subsystems]

    @property
    def n_total(self) -> int:
        return sum(s.n for s in self.subsystems)

    @property
    def m_total(self) -> int:
        return sum(s.m for s in self.subsystems)

    def state_slices(self) -> dict[int, slice]:
        out, off = {}, 0
        for s in self.subsystems:
            out[s.id] = slice(off, off + s.n)
            off += s.n
        return out

    def input_slices(self) -> dict[int, slice]:
        out, off = {}, 0
        for s in self.subsystems:
            out[s.id] = slice(off, off + s.m)
            off += s.m
        return out


@dataclass(frozen=True)
class LossSpec:
    """Which actuator columns were lost, per subsystem id.

    Column indices are 0-based into that subsystem's B; at least one
    actuator must be lost in total.
    """

    losses: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        norm = []
        seen = set()
        for sid, cols in self.losses:
            cols = tuple(int(c) for c in cols)
            if sid in seen:
                raise ScenarioError(f"duplicate loss entry for subsystem {sid}")
            seen.add(sid)
            if len(set(cols)) != len(cols):
                raise ScenarioError(f"repeated actuator index in loss for {sid}")
            norm.append((int(sid), cols))
        object.__setattr__(self, "losses", tuple(norm))
        if not self.losses or sum(len(c) for _, c in self.losses) < 1:
            raise ScenarioError("a loss must remove at least one actuator")

    def validate_against(self, spec: NetworkSpec) -> None:
        for sid, cols in self.losses:
            sub = spec.subsystem(sid)
            for c in cols:
                if not 0 <= c < sub.m:
                    raise ScenarioError(
                        f"lost actuator {c} out of range for subsystem {sid} "
                        f"(m={sub.m})")

    def lost_for(self, sid: int) -> tuple[int, ...]:
        for s, cols in self.losses:
            if s == sid:
                return cols
        return ()

    @property
    def touched(self) -> list[int]:
        return [sid for sid, _ in self.losses]


def assemble(spec: NetworkSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Global (A, D, B) blocks: A and B block-diagonal, D from couplings."""
    n, m = spec.n_total, spec.m_total
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    D = np.zeros((n, n))
    srow = spec.state_slices()
    scol = spec.input_slices()
    for s in spec.subsystems:
        A[srow[s.id], srow[s.id]] = s.A
        B[srow[s.id], scol[s.id]] = s.B
        for k, Dik in s.couplings.items():
            D[srow[s.id], srow[k]] = Dik
    return A, D, B


def stack_losses(spec: NetworkSpec, loss: LossSpec) -> tuple[NetworkSpec, LossSpec, list[int]]:
    """Merge all malfunctioning subsystems into one trailing subsystem.

    Returns (stacked spec, stacked loss, permutation) where permutation
    lists the original subsystem ids in the stacked state order: healthy
    subsystems first (original order), then the lossy ones (original
    order) merged into a single subsystem whose id is the first lossy id.

    Couplings between two merged subsystems have nowhere to live in the
    coupling map of the merged node (no self-coupling), so they are
    absorbed into its A block; trajectories are preserved exactly.
    """
    loss.validate_against(spec)
    lossy = [s for s in spec.subsystems if s.id in loss.touched]
    healthy = [s for s in spec.subsystems if s.id not in loss.touched]
    if not lossy:
        raise ScenarioError("loss touches no subsystem")
    order = healthy + lossy
    permutation = [s.id for s in order]

    if len(lossy) == 1:
        merged = lossy[0]
        merged_loss = LossSpec(((merged.id, loss.lost_for(merged.id)),))
        stacked = NetworkSpec(tuple(healthy) + (merged,),
                              name=spec.name, description=spec.description)
        return stacked, merged_loss, permutation

    n_c = sum(s.n for s in lossy)
    m_c = sum(s.m for s in lossy)
    A_c = np.zeros((n_c, n_c))
    B_c = np.zeros((n_c, m_c))
    off_n = {}
    off_m = {}
    rn = rm = 0
    for s in lossy:
        off_n[s.id], off_m[s.id] = rn, rm
        A_c[rn:rn + s.n, rn:rn + s.n] = s.A
        B_c[rn:rn + s.n, rm:rm + s.m] = s.B
        rn += s.n
        rm += s.m
    lossy_ids = set(s.id for s in lossy)
    couplings_c: dict[int, np.ndarray] = {}
    for s in lossy:
        for k, Dik in s.couplings.items():
            if k in lossy_ids:
                # internal coupling between merged nodes -> absorb into A_c
                A_c[off_n[s.id]:off_n[s.id] + s.n,
                    off_n[k]:off_n[k] + spec.subsystem(k).n] += Dik
            else:
                blk = couplings_c.setdefault(
                    k, np.zeros((n_c, spec.subsystem(k).n)))
                blk[off_n[s.id]:off_n[s.id] + s.n, :] += Dik
    merged_id = lossy[0].id
    merged = Subsystem(id=merged_id, A=A_c, B=B_c, couplings=couplings_c)

    new_healthy = []
    for s in healthy:
        coup = {}
        for k, Dik in s.couplings.items():
            if k in lossy_ids:
                blk = coup.setdefault(merged_id, np.zeros((s.n, n_c)))
                blk[:, off_n[k]:off_n[k] + spec.subsystem(k).n] += Dik
            else:
                coup[k] = Dik
        new_healthy.append(Subsystem(id=s.id, A=s.A, B=s.B, couplings=coup))

    lost_cols = []
    for s in lossy:
        lost_cols.extend(off_m[s.id] + c for c in loss.lost_for(s.id))
    merged_loss = LossSpec(((merged_id, tuple(sorted(lost_cols))),))
    stacked = NetworkSpec(tuple(new_healthy) + (merged,),
                          name=spec.name, description=spec.description)
    return stacked, merged_loss, permutation


@dataclass(frozen=True)
class PartitionedNetwork:
    """Global matrices of a network whose last subsystem lost actuators.

    Blocks follow the healthy-state / malfunctioning-state split:
    chi = states of subsystems 1..N-1 (dimension n_healthy) and
    x_N = state of the trailing malfunctioning subsystem.
    """

    A: np.ndarray            # n x n block diagonal
    D: np.ndarray            # n x n coupling, zero diagonal blocks
    B: np.ndarray            # n x (m - p) retained actuation
    C: np.ndarray            # n x p lost actuation (zero except last rows)
    Ahat: np.ndarray         # healthy diagonal block of A
    Dhat: np.ndarray         # healthy-healthy coupling
    Bhat: np.ndarray         # healthy actuation (block diagonal)
    D_minus_N: np.ndarray    # coupling from x_N into chi
    D_N_minus: np.ndarray    # coupling from chi into x_N
    A_N: np.ndarray
    B_N: np.ndarray
    C_N: np.ndarray
    state_ids: tuple[tuple[int, slice], ...]   # global state layout by subsystem id
    input_ids: tuple[tuple[int, slice], ...]   # retained-input layout by subsystem id
    permutation: tuple[int, ...]               # original ids in stacked order

    @property
    def n_total(self) -> int:
        return self.A.shape[0]

    @property
    def n_N(self) -> int:
        return self.A_N.shape[0]

    @property
    def n_healthy(self) -> int:
        return self.n_total - self.n_N

    @property
    def p_N(self) -> int:
        return self.C_N.shape[1]

    def split_state(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=float).ravel()
        return X[: self.n_healthy], X[self.n_healthy:]


def apply_loss(spec: NetworkSpec, loss: LossSpec,
               permutation: tuple[int, ...] | None = None) -> PartitionedNetwork:
    """Split the trailing subsystem's B into retained/lost columns and
    extract all partition blocks.

    Expects a stacked spec: exactly one subsystem carries losses and it
    is last in order (use stack_losses first).
    """
    loss.validate_against(spec)
    touched = loss.touched
    if len(touched) != 1 or touched[0] != spec.subsystems[-1].id:
        raise ScenarioError(
            "apply_loss expects a stacked spec with the single "
            "malfunctioning subsystem last; run stack_losses first")
    sub_N = spec.subsystems[-1]
    lost = sorted(loss.lost_for(sub_N.id))
    kept = [j for j in range(sub_N.m) if j not in lost]
    B_N = sub_N.B[:, kept]
    C_N = sub_N.B[:, lost]

    A, D, Bbar = assemble(spec)
    n = spec.n_total
    n_N = sub_N.n
    nh = n - n_N

    # retained global input: healthy inputs then kept columns of the last block
    srow = spec.state_slices()
    scol = spec.input_slices()
    m_ret = spec.m_total - len(lost)
    B = np.zeros((n, m_ret))
    input_ids = []
    off = 0
    for s in spec.subsystems[:-1]:
        B[srow[s.id], off:off + s.m] = s.B
        input_ids.append((s.id, slice(off, off + s.m)))
        off += s.m
    B[srow[sub_N.id], off:off + len(kept)] = B_N
    input_ids.append((sub_N.id, slice(off, off + len(kept))))
    C = np.zeros((n, len(lost)))
    C[srow[sub_N.id], :] = C_N

    state_ids = tuple((s.id, srow[s.id]) for s in spec.subsystems)
    return PartitionedNetwork(
        A=A, D=D, B=B, C=C,
        Ahat=A[:nh, :nh], Dhat=D[:nh, :nh], Bhat=B[:nh, : m_ret - len(kept)],
        D_minus_N=D[:nh, nh:], D_N_minus=D[nh:, :nh],
        A_N=sub_N.A, B_N=B_N, C_N=C_N,
        state_ids=state_ids, input_ids=tuple(input_ids),
        permutation=tuple(permutation) if permutation else tuple(spec.ids),
    )


def partition(spec: NetworkSpec, loss: LossSpec) -> PartitionedNetwork:
    """stack_losses followed by apply_loss."""
    stacked, stacked_loss, perm = stack_losses(spec, loss)
    return apply_loss(stacked, stacked_loss, tuple(perm))


def permutation_matrix(spec: NetworkSpec, permutation: list[int]) -> np.ndarray:
    """State permutation T with X_stacked = T @ X_original."""
    srow = spec.state_slices()
    n = spec.n_total
    T = np.zeros((n, n))
    off = 0
    for sid in permutation:
        sl = srow[sid]
        width = sl.stop - sl.start
        T[off:off + width, sl] = np.eye(width)
        off += width
    return T

"""Hypercube image geometry: membership, containment, min-max
magnitudes, and the counteraction set Z."""

import numpy as np
import pytest

import resilnet as rn
from resilnet.sets import cube_vertices


def zonotope_2d_member(G, z, tol=1e-9):
    """Exact membership of z in G*[-1,1]^m for 2-D zonotopes: the facet
    normals are the 90-degree rotations of the generators."""
    inside = True
    for j in range(G.shape[1]):
        g = G[:, j]
        d = np.array([g[1], -g[0]])
        if np.linalg.norm(d) < 1e-14:
            continue
        h = np.sum(np.abs(d @ G))
        if abs(d @ z) > h + tol:
            inside = False
    return inside


def projection_oracle_outside(B, z, rng, trials=40):
    """Certified 'z outside BU' via random 2-D projections (projection
    of a zonotope is a zonotope; membership there is exact)."""
    n = B.shape[0]
    for _ in range(trials):
        T = rng.standard_normal((2, n))
        if not zonotope_2d_member(T @ B, T @ z):
            return True
    return False


class TestMemberBU:
    def test_zero_always_member(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            B = rng.standard_normal((3, int(rng.integers(0, 5))))
            assert rn.member_BU(np.zeros(3), B)

    def test_scalar_outside(self):
        assert not rn.member_BU([1.5], [[1.0]])
        assert rn.member_BU([1.0], [[1.0]])

    def test_random_inside_and_scaled_outside(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            B = rng.standard_normal((3, 5))
            u = rng.uniform(-1, 1, 5)
            z = B @ u
            assert rn.member_BU(z, B)
            z_out = z / max(np.abs(u).max(), 1e-9) * 1.01
            claimed = rn.member_BU(z_out, B)
            if projection_oracle_outside(B, z_out, rng):
                assert not claimed
            # agreement the other way: membership implies no projection
            # can certify the point outside
            if claimed:
                assert not projection_oracle_outside(B, z_out, rng)


class TestContainment:
    def test_academic_not_contained(self):
        assert not rn.contains_negCW_in_BU([[1.0]], [[2.0]])

    def test_zero_C(self):
        assert rn.contains_negCW_in_BU(np.eye(2), np.zeros((2, 2)))

    def test_constructive_containment(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            B = rng.standard_normal((3, 4))
            M = rng.standard_normal((4, 2))
            # scale so the induced inf-norm (max abs row sum) is <= 1
            M = M / max(np.abs(M).sum(axis=1).max(), 1e-9) * rng.uniform(0.2, 0.99)
            assert rn.contains_negCW_in_BU(B, B @ M)

    def test_vertex_cap(self):
        with pytest.raises(rn.TooManyVertices):
            rn.contains_negCW_in_BU(np.ones((1, 1)), np.ones((1, 21)))


def brute_force_z_max(B, C, P, grid=201):
    """Dense w-vertex x u-grid oracle (m <= 2)."""
    m = B.shape[1]
    axes = [np.linspace(-1, 1, grid)] * m
    if m == 0:
        U = np.zeros((1, 0))
    else:
        U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    best = -np.inf
    for w in cube_vertices(C.shape[1]):
        r = C @ w + U @ B.T
        vals = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", r, P, r), 0.0))
        best = max(best, vals.min())
    return best


class TestZMax:
    def test_academic_euclidean_convention(self):
        # the published constants evaluate z_max in the Euclidean norm
        assert rn.z_max([[1.0]], [[2.0]], np.eye(1)) == pytest.approx(1.0, abs=1e-12)

    def test_academic_lyapunov_norm(self):
        assert rn.z_max([[1.0]], [[2.0]], [[0.5]]) == \
            pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_zero_C(self):
        assert rn.z_max(np.eye(2), np.zeros((2, 2)), np.eye(2)) == 0.0

    def test_against_grid_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            B = rng.standard_normal((3, 2))
            C = rng.standard_normal((3, 2))
            M = rng.standard_normal((3, 3))
            P = M @ M.T + 3 * np.eye(3)
            val = rn.z_max(B, C, P)
            oracle = brute_force_z_max(B, C, P)
            assert val == pytest.approx(oracle, abs=1e-4)

    def test_vertex_sufficiency_dense_w_grid(self):
        """Convexity in w: vertex enumeration equals a dense w-grid."""
        rng = np.random.default_rng(6)
        from resilnet.sets import _min_residual
        for _ in range(5):
            B = rng.standard_normal((2, 2))
            C = rng.standard_normal((2, 2))
            P = np.eye(2)
            val = rn.z_max(B, C, P)
            ws = np.stack(np.meshgrid(np.linspace(-1, 1, 21),
                                      np.linspace(-1, 1, 21),
                                      indexing="ij"), axis=-1).reshape(-1, 2)
            dense = max(_min_residual(B, P, C @ w)[1] for w in ws)
            assert val >= dense - 1e-4
            assert val == pytest.approx(dense, abs=1e-4)


class TestZPrime:
    def test_zero_C(self):
        assert rn.z_prime(np.eye(2), np.zeros((2, 2)), np.eye(2)) == 0.0

    def test_academic_scalar_closed_form(self):
        # u committed before w: min_u max_w |2w + u| = min_u (2 + |u|) = 2,
        # attained at u = 0 (strictly larger than the reactive value 1)
        val = rn.z_prime([[1.0]], [[2.0]], np.eye(1))
        assert val == pytest.approx(2.0, abs=1e-6)

    def test_dominates_z_max(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            B = rng.standard_normal((2, 2))
            C = rng.standard_normal((2, 1))
            P = np.eye(2)
            assert rn.z_prime(B, C, P) >= rn.z_max(B, C, P) - 1e-8


def brute_force_b_min(B, P, grid=101):
    m = B.shape[1]
    best = np.inf
    axes = [np.linspace(-1, 1, grid)] * (m - 1)
    if m == 1:
        inner = np.zeros((1, 0))
    else:
        inner = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m - 1)
    for j in range(m):
        for s in (1.0, -1.0):
            U = np.insert(inner, j, s, axis=1)
            r = U @ B.T
            vals = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", r, P, r), 0.0))
            best = min(best, vals.min())
    return best


class TestBMin:
    def test_academic_euclidean_convention(self):
        assert rn.b_min(2.0 * np.eye(2), np.eye(2)) == pytest.approx(2.0, abs=1e-10)

    def test_academic_lyapunov_norm(self):
        Phat = rn.solve_lyapunov([[-1.0, 0.3], [0.3, -1.0]]).P
        assert rn.b_min(2.0 * np.eye(2), Phat) == \
            pytest.approx(np.sqrt(2.0), abs=1e-9)

    def test_scalar_unit(self):
        assert rn.b_min([[1.0]], [[1.0]]) == pytest.approx(1.0)

    def test_against_face_grid_oracle(self):
        # square B keeps the face minima nondegenerate (a wide B admits
        # null-space directions on a face, where the exact minimum is 0
        # and a finite grid can only get close)
        rng = np.random.default_rng(8)
        for _ in range(8):
            B = rng.standard_normal((2, 2))
            if abs(np.linalg.det(B)) < 0.3:
                continue
            M = rng.standard_normal((2, 2))
            P = M @ M.T + 2 * np.eye(2)
            val = rn.b_min(B, P)
            oracle = brute_force_b_min(B, P)
            assert val <= oracle + 1e-9
            assert val == pytest.approx(oracle, abs=1e-3)

    def test_wide_B_null_direction_on_face(self):
        # for a wide B whose negated column is reachable by the others,
        # the boundary minimum collapses to zero exactly
        B = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]])
        assert rn.b_min(B, np.eye(2)) == pytest.approx(0.0, abs=1e-12)

    def test_rank_deficient_rejected(self):
        with pytest.raises(rn.NotFullRowRank):
            rn.b_min(np.ones((2, 2)), np.eye(2))


class TestBuildZ:
    def test_scalar_interval(self):
        zs = rn.build_Z([[1.0]], [[0.5]])
        assert zs.zero_in and zs.dim == 1
        assert abs(abs(zs.span_basis[0, 0]) - 0.5) < 1e-4
        assert zs.contains([0.49]) and not zs.contains([0.51])

    def test_academic_empty(self):
        zs = rn.build_Z([[1.0]], [[2.0]])
        assert zs.empty and zs.dim == 0 and not zs.full_dim

    def test_dim_matches_rank_with_small_C(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            B = rng.standard_normal((3, 4))
            C = 0.3 * B[:, :1]
            zs = rn.build_Z(B, C)
            assert zs.dim == np.linalg.matrix_rank(B)
            # every basis column is a certified member
            for j in range(zs.span_basis.shape[1]):
                assert zs.contains(zs.span_basis[:, j], tol=1e-6)

    def test_slice_oracle_2d(self):
        """2-D instance checked against an exact interval computation:
        Z for diagonal B and axis-aligned C is a box."""
        B = np.diag([2.0, 1.0])
        C = np.array([[0.6], [0.0]])
        zs = rn.build_Z(B, C)
        # Z = [-(2-0.6), 2-0.6] x [-1, 1]
        assert zs.full_dim
        assert zs.contains([1.39, 0.99])
        assert not zs.contains([1.41, 0.0])
        assert not zs.contains([0.0, 1.01])

    def test_symmetry_of_ray_extent(self):
        from resilnet.sets import _ray_extent
        rng = np.random.default_rng(10)
        B = rng.standard_normal((2, 3))
        C = 0.2 * rng.standard_normal((2, 1))
        for _ in range(5):
            d = rng.standard_normal(2)
            t1 = _ray_extent(d, B, C)
            t2 = _ray_extent(-d, B, C)
            assert t1 == pytest.approx(t2, abs=1e-3)


class TestProductZ:
    def test_healthy_product_is_full_image(self):
        Z_N = rn.build_Z([[1.0]], np.zeros((1, 1)))
        prod = rn.product_Z([2.0 * np.eye(2)], Z_N)
        assert prod.dim == 3 and prod.zero_in
        assert prod.contains([2.0, -2.0, 1.0])
        assert not prod.contains([2.1, 0.0, 0.0])

    def test_academic_network_structure(self):
        Z_N = rn.build_Z([[1.0]], [[2.0]])
        prod = rn.product_Z([np.array([[2.0]]), np.array([[2.0]])], Z_N)
        assert prod.empty
        assert prod.dim == 2          # structural span of the healthy factors

    def test_membership_agrees_with_assembled_set(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            B1 = rng.standard_normal((2, 2))
            B_N = rng.standard_normal((1, 2))
            C_N = 0.3 * rng.standard_normal((1, 1))
            Z_N = rn.build_Z(B_N, C_N)
            prod = rn.product_Z([B1], Z_N)
            for _ in range(20):
                z = rng.uniform(-1.5, 1.5, 3)
                assert prod.contains(z) == rn.member_Z(z, prod.B, prod.C)


class TestSupportZ:
    def test_axis_box(self):
        zs = rn.build_Z(np.eye(2), np.zeros((2, 1)))
        val, agreed = rn.support_Z([1.0, 0.0], zs)
        assert agreed and val == pytest.approx(1.0, abs=1e-6)

    def test_scalar_interval(self):
        zs = rn.build_Z([[1.0]], [[0.5]])
        val, agreed = rn.support_Z([1.0], zs)
        assert agreed and val == pytest.approx(0.5, abs=1e-6)

    def test_empty_rejected(self):
        zs = rn.build_Z([[1.0]], [[2.0]])
        with pytest.raises(rn.EmptySetError):
            rn.support_Z([1.0], zs)

    def test_against_sampling_oracle(self):
        rng = np.random.default_rng(12)
        B = np.diag([1.5, 0.8])
        C = np.array([[0.4], [0.0]])
        zs = rn.build_Z(B, C)
        d = np.array([1.0, 0.0])
        val, _ = rn.support_Z(d, zs)
        best = -np.inf
        accepted = 0
        for _ in range(10000):
            z = rng.uniform(-1.6, 1.6, 2)
            if accepted < 800 and zs.contains(z, tol=1e-7):
                accepted += 1
                best = max(best, d @ z)
        assert val >= best - 1e-9
        assert val == pytest.approx(1.1, abs=1e-3)   # 1.5 - 0.4 exact interval


class TestContainmentEquivalence:
    def test_equivalence_containment_iff_zero_zmax(self):
        rng = np.random.default_rng(13)
        agree = 0
        for k in range(200):
            n = int(rng.integers(1, 3))
            B = rng.standard_normal((n, int(rng.integers(1, 4))))
            if k % 2 == 0:
                M = rng.standard_normal((B.shape[1], 1))
                M = M / max(np.abs(M).sum(axis=1).max(), 1e-9) * 0.8
                C = B @ M              # contained instance
            else:
                C = rng.standard_normal((n, 1))
            P = np.eye(n)
            contained = rn.contains_negCW_in_BU(B, C)
            zm = rn.z_max(B, C, P)
            assert contained == (zm < 1e-7)
            # 0 in Z iff containment
            assert rn.member_Z(np.zeros(n), B, C) == contained
            agree += 1
        assert agree == 200

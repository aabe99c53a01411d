"""Acceptance gate: one test per published-result criterion, each
printing a PASS/FAIL line with the computed evidence.

Run with `pytest -s tests/test_acceptance.py` to see the criterion
lines; every tolerance is pinned here, nothing is deferred.
"""

import time
from pathlib import Path

import numpy as np
import pytest

import resilnet as rn

SCEN = Path(rn.__file__).parent / "scenarios"


def _report(name: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


# ----------------------------------- fully-actuated benchmark --

def test_academic_full_constants():
    t0 = time.perf_counter()
    sc = rn.parse_scenario(SCEN / "academic_full.scn")
    stacked, sloss, perm = rn.stack_losses(sc.network, sc.loss)
    pn = rn.apply_loss(stacked, sloss, tuple(perm))
    bp = rn.constants_fully_actuated(pn, chi0=[1.0, 1.0], xN0=[0.0])
    v7 = rn.finite_time_verdict(bp)
    elapsed = time.perf_counter() - t0

    checks = {
        "P_N = 0.5": abs(bp.P_N[0, 0] - 0.5) < 1e-9,
        "alpha_N = 1": abs(bp.alpha_N - 1.0) < 1e-9,
        "z_max = 1": abs(bp.z_max - 1.0) < 1e-9,
        "b_min = 2": abs(bp.b_min - 2.0) < 1e-9,
        "alpha = 0.7 (+-0.005)": abs(bp.alpha - 0.7) <= 5e-3,
        "gamma = 0.51 (+-0.005)": abs(bp.gamma - 0.51) <= 5e-3,
        "gamma_N = 0.48 (+-0.005)": abs(bp.gamma_N - 0.48) <= 5e-3,
        "gamma*gamma_N = 0.25 (+-0.01)": abs(bp.gamma_gammaN - 0.25) <= 1e-2,
        "finite-time evidence 0.5 < 2":
            v7.positive
            and abs(v7.evidence("disturbance_vs_floor").value - 0.5) <= 1e-2
            and abs(v7.evidence("disturbance_vs_floor").threshold - 2.0) < 1e-9,
        "runtime < 1 s": elapsed < 1.0,
    }
    bad = [k for k, ok in checks.items() if not ok]
    _report("fully-actuated benchmark constants", not bad,
            f"alpha={bp.alpha:.4f} gamma={bp.gamma:.4f} gamma_N={bp.gamma_N:.4f} "
            f"z={bp.z_max} b={bp.b_min} t={elapsed:.2f}s"
            + (f" FAILED: {bad}" if bad else ""))


def test_academic_full_simulation():
    t0 = time.perf_counter()
    sc = rn.parse_scenario(SCEN / "academic_full.scn")
    res = rn.run(sc)
    elapsed = time.perf_counter() - t0
    traj = res.trajectory
    rep = res.report
    hit = bool(np.any(traj.channels["chi_Pnorm"] <= 1e-3))
    viol = rep.violations
    checks = {
        "chi reaches 1e-3": hit,
        "integral bound: zero violations": viol["xN_vs_integral"]["violations"] == 0,
        "healthy-norm envelope: zero violations": viol["chi_vs_envelope"]["violations"] == 0,
        "closed-form bound: zero violations": viol["xN_vs_closed"]["violations"] == 0,
        "exactly one branch switch": rep.envelopes["xN_branch_switches"] == 1,
        "runtime < 5 s": elapsed < 5.0,
    }
    bad = [k for k, ok in checks.items() if not ok]
    _report("fully-actuated benchmark simulation", not bad,
            f"chi_min={traj.channels['chi_Pnorm'].min():.2e} "
            f"switch_t={rep.envelopes['xN_switch_time']} t={elapsed:.2f}s"
            + (f" FAILED: {bad}" if bad else ""))


# ------------------------------------- underactuated benchmark --

def test_academic_under():
    t0 = time.perf_counter()
    sc = rn.parse_scenario(SCEN / "academic_under.scn")
    res = rn.run(sc)
    elapsed = time.perf_counter() - t0
    bp = res.bp
    K = bp.K
    adm = rn.admissibility_underactuated(bp)
    viol = res.report.violations
    max_fb = res.trajectory.events["max_feedback_inf"]
    checks = {
        "K within 1e-3 of (0.6383, 0.1521)":
            abs(K[0, 0] - 0.6383) <= 1e-3 and abs(K[0, 1] - 0.1521) <= 1e-3,
        "gamma*gamma_N = 0.24 (+-0.01)": abs(bp.gamma_gammaN - 0.24) <= 1e-2,
        "alpha*alpha_N = 0.98 (+-0.01)": abs(bp.alpha_alphaN - 0.98) <= 1e-2,
        "coupling below stability": bp.gamma_gammaN < bp.alpha_alphaN,
        "sup b = b(0) = 0.9 (+-0.02)":
            adm.sup_at == 0.0 and abs(adm.sup_b - 0.9) <= 2e-2,
        "threshold 0.71 (+-0.02)": abs(adm.threshold - 0.71) <= 2e-2,
        "sufficient admissibility check fails": not adm.sufficient_pass,
        "simulated max |K chi|_inf <= 1": max_fb <= 1.0,
        "interior minimum at T = 1.9 (+-0.1)":
            adm.interior_critical_time is not None
            and abs(adm.interior_critical_time - 1.9) <= 0.1
            and adm.interior_critical_value < min(adm.sup_b, bp.p),
        "feedback envelope: zero violations": viol["chi_vs_envelope"]["violations"] == 0,
        "underactuated closed bound: zero violations": viol["xN_vs_closed"]["violations"] == 0,
        "runtime < 5 s": elapsed < 5.0,
    }
    bad = [k for k, ok in checks.items() if not ok]
    _report("underactuated benchmark", not bad,
            f"K=({K[0,0]:.4f},{K[0,1]:.4f}) gg={bp.gamma_gammaN:.4f} "
            f"aa={bp.alpha_alphaN:.4f} sup_b={adm.sup_b:.3f} "
            f"T={adm.interior_critical_time:.2f} maxK={max_fb:.3f} "
            f"t={elapsed:.2f}s" + (f" FAILED: {bad}" if bad else ""))


# ------------------------------------------ IEEE 39-bus benchmark --

def test_ieee39():
    t0 = time.perf_counter()
    sc = rn.parse_scenario(SCEN / "ieee39.scn")
    res = rn.run(sc)
    elapsed = time.perf_counter() - t0
    bp = res.bp
    traj = res.trajectory
    viol = res.report.violations
    gg, aa = bp.gamma_gammaN, bp.alpha_alphaN
    env19 = res.envelopes["xN_closed"]
    mask = traj.times <= 5.0
    sim_xN = traj.channels["xN_Pnorm"]
    with np.errstate(over="ignore", invalid="ignore"):
        env_vals = np.asarray(env19(traj.times[mask]))
        exceeds_10x = bool(np.any(env_vals > 10.0 * np.maximum(sim_xN[mask], 1e-12)))
    max_fb = traj.events["max_feedback_inf"]
    checks = {
        "gamma*gamma_N within 1.1x of 6.3e4": 6.3e4 / 1.1 <= gg <= 6.3e4 * 1.1,
        "alpha*alpha_N within 1.1x of 5.7e-3": 5.7e-3 / 1.1 <= aa <= 5.7e-3 * 1.1,
        "Diverging flag": bp.diverging,
        "integral bound: zero violations on [0,20]":
            viol["xN_vs_integral"]["violations"] == 0
            and traj.times[-1] == pytest.approx(20.0),
        "closed bound exceeds 10x simulation before t=5": exceeds_10x,
        "simulated max |K chi|_inf <= 1": max_fb <= 1.0,
        "runtime < 60 s at dt=1e-3": elapsed < 60.0 and sc.simulation.dt == 1e-3,
    }
    bad = [k for k, ok in checks.items() if not ok]
    _report("IEEE 39-bus benchmark", not bad,
            f"gg={gg:.4g} aa={aa:.4g} maxK={max_fb:.3f} t={elapsed:.1f}s"
            + (f" FAILED: {bad}" if bad else ""))


# ----------------------------------------------- appendix properties --

def test_appendix_property_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)

    # cross-norm gain inequality
    for _ in range(100):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        D = rng.standard_normal((n, m))
        Mo = rng.standard_normal((n, n))
        P_out = Mo @ Mo.T + n * np.eye(n)
        Mi = rng.standard_normal((m, m))
        Q_in = Mi @ Mi.T + m * np.eye(m)
        g = rn.gamma_gain(D, P_out, Q_in)
        for _ in range(20):
            x = rng.standard_normal(m)
            assert rn.p_norm(D @ x, P_out) <= g * rn.p_norm(x, Q_in) + 1e-9
    _report("cross-norm gain inequality (100 instances)", True)

    # Cauchy-Schwarz in the P-inner product
    for _ in range(100):
        n = int(rng.integers(1, 5))
        M = rng.standard_normal((n, n))
        P = M @ M.T + n * np.eye(n)
        for _ in range(10):
            x, y = rng.standard_normal(n), rng.standard_normal(n)
            assert x @ P @ y <= rn.p_norm(x, P) * rn.p_norm(y, P) + 1e-12
    _report("P-norm Cauchy-Schwarz (100 instances)", True)

    # containment <-> z_max = 0
    for k in range(200):
        n = int(rng.integers(1, 3))
        B = rng.standard_normal((n, int(rng.integers(1, 4))))
        if k % 2 == 0:
            M = rng.standard_normal((B.shape[1], 1))
            C = B @ (0.8 * M / max(np.abs(M).sum(axis=1).max(), 1e-9))
        else:
            C = rng.standard_normal((n, 1))
        contained = rn.contains_negCW_in_BU(B, C)
        zm = rn.z_max(B, C, np.eye(n))
        assert contained == (zm < 1e-7)
    _report("containment/z_max equivalence (200 instances)", True)

    # stacked-network trajectory equivalence
    from test_network import random_spec, _rk4_reference
    done = 0
    worst = 0.0
    attempts = 0
    while done < 100 and attempts < 300:
        attempts += 1
        spec = random_spec(rng, n_subs=int(rng.integers(3, 5)), m_max=2,
                           coupling_scale=0.3)
        with_inputs = [s.id for s in spec.subsystems if s.m > 0]
        if len(with_inputs) < 2:
            continue
        loss = rn.LossSpec(tuple((sid, (0,)) for sid in with_inputs[:2]))
        stacked, sloss, perm = rn.stack_losses(spec, loss)
        pn = rn.apply_loss(stacked, sloss, tuple(perm))
        A, D, Bbar = rn.assemble(spec)
        u_full = rng.uniform(-1, 1, spec.m_total)
        X0 = rng.standard_normal(spec.n_total)
        ref = _rk4_reference(A + D, Bbar, u_full, X0, 5.0, 1e-2)
        in_sl = spec.input_slices()
        u_parts = [u_full[in_sl[s.id]] for s in stacked.subsystems[:-1]]
        merged_vals = np.concatenate([u_full[in_sl[sid]] for sid in with_inputs[:2]])
        lost = list(sloss.lost_for(stacked.subsystems[-1].id))
        kept = [j for j in range(stacked.subsystems[-1].m) if j not in lost]
        bundle = rn.PolicyBundle(
            u_hat=rn.ConstantPolicy(np.concatenate(u_parts) if u_parts else np.zeros(0)),
            u_N=rn.ConstantPolicy(merged_vals[kept]),
            w=rn.ConstantPolicy(merged_vals[lost]))
        T = rn.network.permutation_matrix(spec, list(perm))
        traj = rn.simulate(pn, bundle, T @ X0, 5.0, 1e-2)
        diff = np.abs(traj.states @ T - ref).max()
        worst = max(worst, diff)
        assert diff < 1e-10
        done += 1
    assert done == 100
    _report("stacked-network trajectory equivalence (100 instances)", True,
            f"worst diff {worst:.2e}")

    # envelope coefficient root and initial-condition residuals
    for _ in range(100):
        a, aN = rng.uniform(0.2, 2.0, 2)
        g, gN = rng.uniform(0.0, 1.0, 2)
        z, b = rng.uniform(0.1, 2.0), rng.uniform(0.0, 3.0)
        chi0, xN0 = rng.uniform(0.0, 3.0, 2)
        regime, rp, rm, p, hp, hm, _ = rn.solve_bound_coefficients(
            float(a), float(aN), float(g), float(gN), float(z), float(b),
            float(chi0), float(xN0))
        scale = max(1.0, rp * rp, rm * rm)
        assert abs(rp * rp + (a - aN) * rp - g * gN) <= 1e-10 * scale
        assert abs(rm * rm + (a - aN) * rm - g * gN) <= 1e-10 * scale
        rhs2 = (aN - a) * chi0 - b + g * xN0
        if regime == "generic":
            assert abs(p + hp + hm - chi0) <= 1e-9 * max(1.0, abs(p), chi0)
            assert abs(aN * p + hp * rp + hm * rm - rhs2) <= \
                1e-9 * max(1.0, abs(rhs2), abs(p))
        else:
            assert abs(hp + hm - chi0) <= 1e-9 * max(1.0, chi0)
            assert abs(p + aN * hp - a * hm - rhs2) <= 1e-9 * max(1.0, abs(rhs2))
    _report("envelope coefficient residuals (100 instances)", True)

    # product-set membership agreement
    for _ in range(100):
        n1 = int(rng.integers(1, 3))
        B1 = rng.standard_normal((n1, int(rng.integers(1, 3))))
        B_N = rng.standard_normal((1, 2))
        C_N = 0.4 * rng.standard_normal((1, 1))
        Z_N = rn.build_Z(B_N, C_N)
        prod = rn.product_Z([B1], Z_N)
        for _ in range(5):
            z = rng.uniform(-1.5, 1.5, n1 + 1)
            assert prod.contains(z) == rn.member_Z(z, prod.B, prod.C)
    _report("Product-set membership agreement (100 instances)", True)

    # full-span equivalence: resilience verdict pairs with the pre-loss one
    pairs = {rn.Conclusion.STABILIZABLE: rn.Conclusion.RESILIENTLY_STABILIZABLE,
             rn.Conclusion.CONTROLLABLE: rn.Conclusion.RESILIENT,
             rn.Conclusion.NEGATIVE: rn.Conclusion.NEGATIVE}
    done = 0
    attempts = 0
    while done < 100 and attempts < 250:
        attempts += 1
        n = int(rng.integers(1, 4))
        A = rng.standard_normal((n, n))
        mode = attempts % 3
        if mode == 0:
            A = A - (rn.spectral_abscissa(A) + 0.5) * np.eye(n)
        elif mode == 1:
            S = rng.standard_normal((n, n))
            A = S - S.T
        B = rng.standard_normal((n, n + 1))
        M = rng.standard_normal((n + 1, 1))
        C = B @ (0.5 * M / max(np.abs(M).sum(axis=1).max(), 1e-9))
        zs = rn.build_Z(B, C)
        if zs.dim != np.linalg.matrix_rank(B):
            continue
        v_res = rn.resilient_NS(A, B, C, zset=zs)
        v_pre = rn.brammer(A, B)
        assert v_res.conclusion == pairs[v_pre.conclusion]
        done += 1
    assert done == 100
    _report("Full-span paired-verdict agreement (100 instances)", True)

    # reactive-adversary magnitude dominates the proactive one
    for _ in range(100):
        n = int(rng.integers(1, 3))
        B = rng.standard_normal((n, int(rng.integers(1, 3))))
        C = rng.standard_normal((n, int(rng.integers(1, 3))))
        P = np.eye(n)
        assert rn.z_prime(B, C, P) >= rn.z_max(B, C, P) - 1e-8
    _report("z' >= z_max (100 instances)", True)

    elapsed = time.perf_counter() - t0
    _report("appendix suites total runtime < 120 s", elapsed < 120.0,
            f"{elapsed:.1f}s")


# ------------------------------------------------- domination chain --

def _domination_instance(rng):
    a1, a2 = rng.uniform(-0.45, -0.2, 2)
    b1, b2 = rng.uniform(0.9, 1.8, 2)
    aN = float(rng.uniform(-3.0, -1.5))
    bN = float(rng.uniform(0.6, 1.2))
    cN = bN * float(rng.uniform(1.3, 2.5))
    d = rng.uniform(-0.08, 0.08, 6)
    subs = (
        rn.Subsystem(id=1, A=[[a1]], B=[[b1]],
                     couplings={2: [[d[0]]], 3: [[d[1]]]}),
        rn.Subsystem(id=2, A=[[a2]], B=[[b2]],
                     couplings={1: [[d[2]]], 3: [[d[3]]]}),
        rn.Subsystem(id=3, A=[[aN]], B=[[bN, cN]],
                     couplings={1: [[d[4]]], 2: [[d[5]]]}),
    )
    spec = rn.NetworkSpec(subs)
    pn = rn.partition(spec, rn.LossSpec(((3, (1,)),)))
    chi0 = rng.uniform(-1.0, 1.0, 2)
    xN0 = rng.uniform(-0.5, 0.5, 1)
    return pn, chi0, xN0


def test_domination_chain():
    """On finite-time-certified instances the simulated norms sit below the
    closed-form envelopes, and the integral bound below the closed one."""
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    accepted = 0
    attempts = 0
    worst = -np.inf
    while accepted < 50 and attempts < 400:
        attempts += 1
        pn, chi0, xN0 = _domination_instance(rng)
        try:
            bp = rn.constants_fully_actuated(pn, chi0=chi0, xN0=xN0)
        except rn.ResilnetError:
            continue
        if not rn.finite_time_verdict(bp).positive:
            continue
        # envelope validity needs the published-convention magnitudes to
        # dominate their Lyapunov-norm counterparts
        if rn.z_max(pn.B_N, pn.C_N, bp.P_N) > bp.z_max:
            continue
        if rn.b_min(pn.Bhat, bp.Phat) < bp.b_min:
            continue
        bundle = rn.PolicyBundle(
            u_hat=rn.NormDirectionPolicy(b_min=bp.b_min),
            u_N=rn.BestResponsePolicy(),
            w=rn.WorstVertexPolicy(pn.B_N, pn.C_N, np.eye(pn.n_N)))
        # dt pinned at 1e-3: the trapezoid quadrature of the integral
        # bound carries a (alpha_N dt)^2/12 steady-state bias that must
        # stay below the 1e-6 comparison tolerance
        traj = rn.simulate(pn, bundle, np.concatenate([chi0, xN0]), 8.0, 1e-3,
                           Phat=bp.Phat, P_N=bp.P_N, b_min=bp.b_min)
        env10 = rn.chi_envelope(bp)
        chi_zero = traj.events.get("origin_snap_time", env10.zero_time)
        env13 = rn.xN_closed_envelope(bp, chi_zero_time=chi_zero)
        eq9 = rn.xN_integral_bound(traj, bp)
        rep = rn.check_envelopes(traj, {
            "chi_Pnorm": env10, "xN_Pnorm": eq9}, atol=1e-6)
        rep2 = rn.check_envelopes(traj, {"xN_Pnorm": env13}, atol=1e-6)
        assert rep.ok and rep2.ok, \
            f"violation at attempt {attempts}: {rep.to_dict()} {rep2.to_dict()}"
        gap = eq9 - np.asarray(env13(traj.times))
        assert gap.max() <= 1e-6, f"Eq9 above Eq13 by {gap.max():.2e}"
        worst = max(worst, rep.check("chi_Pnorm").worst_slack)
        accepted += 1
    elapsed = time.perf_counter() - t0
    _report("Domination chain (50 finite-time-certified instances)",
            accepted == 50, f"{accepted}/50 in {attempts} attempts, "
            f"worst chi slack {worst:.2e}, {elapsed:.1f}s")


# ----------------------------------------------------- oracle suites --

def test_oracle_suites():
    rng = np.random.default_rng(303)

    # z_max against dense grids (p <= 3, m <= 3)
    from test_sets import brute_force_z_max, brute_force_b_min
    done = 0
    while done < 5:
        B = rng.standard_normal((2, 2))
        C = rng.standard_normal((2, int(rng.integers(1, 4))))
        M = rng.standard_normal((2, 2))
        P = M @ M.T + 2 * np.eye(2)
        val = rn.z_max(B, C, P)
        if val < 0.2:
            # a grid cannot resolve near-zero minima to 1e-3 (the
            # residual is linear in the off-grid distance there)
            continue
        assert val == pytest.approx(brute_force_z_max(B, C, P), abs=1e-3)
        done += 1
    _report("z_max grid oracle (1e-3)", True)

    # b_min against face grids on square instances
    for _ in range(5):
        B = rng.standard_normal((2, 2))
        if abs(np.linalg.det(B)) < 0.3:
            B = B + 2 * np.eye(2)
        M = rng.standard_normal((2, 2))
        P = M @ M.T + 2 * np.eye(2)
        assert rn.b_min(B, P) == pytest.approx(
            brute_force_b_min(B, P), abs=1e-3)
    _report("b_min face-grid oracle (1e-3)", True)

    # Lyapunov solves against the vectorized-equation oracle
    from test_margins import lyapunov_vec_oracle, random_hurwitz, random_spd
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        A = random_hurwitz(rng, n)
        Q = random_spd(rng, n)
        P = rn.solve_lyapunov(A, Q).P
        P_o = lyapunov_vec_oracle(A, Q)
        worst = max(worst, np.abs(P - P_o).max() / max(1.0, np.abs(P_o).max()))
    _report("Lyapunov vec-equation oracle (1e-8)", worst < 1e-8,
            f"worst rel diff {worst:.2e}")

    # integrator step-halving in the smooth regime
    sc = rn.parse_scenario(SCEN / "academic_full.scn")
    stacked, sloss, perm = rn.stack_losses(sc.network, sc.loss)
    pn = rn.apply_loss(stacked, sloss, tuple(perm))
    bp = rn.constants_fully_actuated(pn, chi0=[1.0, 1.0], xN0=[0.0])

    def run(dt):
        bundle = rn.PolicyBundle(
            u_hat=rn.NormDirectionPolicy(b_min=bp.b_min),
            u_N=rn.ConstantPolicy([-1.0]),
            w=rn.ConstantPolicy([1.0]))
        return rn.simulate(pn, bundle, [1.0, 1.0, 0.0], 0.4, dt,
                           Phat=bp.Phat, P_N=bp.P_N, b_min=bp.b_min)
    d = np.abs(run(1e-3).states - run(5e-4).states[::2]).max()
    _report("step-halving check (1e-8)", d < 1e-8, f"max diff {d:.2e}")

    # the microgrid slot stays a documented placeholder
    with pytest.raises(rn.ScenarioError, match="placeholder"):
        rn.parse_scenario(SCEN / "microgrid.scn")
    text = (SCEN / "microgrid.scn").read_text()
    _report("microgrid slot documented, not reproduced",
            "placeholder: true" in text and "schema" in text)

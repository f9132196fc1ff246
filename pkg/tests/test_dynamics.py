import math

import numpy as np
import pytest

from spillfleet.dynamics import (
    BoomParams,
    BoomState,
    DuoParams,
    DuoState,
    VesselParams,
    VesselState,
    boom_derivative,
    boom_joint_forces,
    clamp_controls,
    duo_derivative,
    init_boom_between,
    kinetic_energy,
    make_duo,
    spring_energy,
    step,
    step_n,
    stern_point,
    stern_velocity,
    tow_forces,
    vessel_derivative,
)
from spillfleet.dynamics.duo import _boom_view
from spillfleet.errors import ConfigError, NumericError

VP = VesselParams()
BP = BoomParams()


def vessel_oracle(state, F, eta, f_lu, f_lv, p):
    """Scalar re-derivation of the 3-DoF rates, independent of vessel.py."""
    x, y, th, u, v, w = state
    du = (F * math.cos(eta) - p.kappa_l * abs(u) * u + f_lu) / p.m + w * v
    dv = (-F * math.sin(eta) - p.kappa_t * abs(v) * v + f_lv) / p.m - w * u
    dw = (p.r * F * math.sin(eta) - p.kappa_w * abs(w) * w
          - p.r * f_lv) / p.I
    dx = u * math.cos(th) - v * math.sin(th)
    dy = u * math.sin(th) + v * math.cos(th)
    return dx, dy, w, du, dv, dw


def joint_oracle(boom, stern_1, stern_2, p):
    """Per-joint spring-damper forces computed with plain Python loops."""
    n = boom.n_links
    ln = p.link_length
    right = [stern_1[0]]
    d_right = [stern_1[1]]
    left = []
    d_left = []
    for i in range(n):
        c, s = math.cos(boom.theta[i]), math.sin(boom.theta[i])
        vx = boom.v_t[i] * c - boom.v_n[i] * s
        vy = boom.v_t[i] * s + boom.v_n[i] * c
        wx, wy = -boom.omega[i] * 0.5 * ln * s, boom.omega[i] * 0.5 * ln * c
        left.append((boom.x[i] - 0.5 * ln * c, boom.y[i] - 0.5 * ln * s))
        right.append((boom.x[i] + 0.5 * ln * c, boom.y[i] + 0.5 * ln * s))
        d_left.append((vx - wx, vy - wy))
        d_right.append((vx + wx, vy + wy))
    left.append(stern_2[0])
    d_left.append(stern_2[1])
    out = []
    for j in range(n + 1):
        gx = left[j][0] - right[j][0]
        gy = left[j][1] - right[j][1]
        dist = math.hypot(gx, gy)
        if dist < 1e-9:
            out.append((0.0, 0.0))
            continue
        ex, ey = gx / dist, gy / dist
        rel = ((d_left[j][0] - d_right[j][0]) * ex
               + (d_left[j][1] - d_right[j][1]) * ey)
        out.append((p.k_spring * gx + p.c_damper * rel * ex,
                    p.k_spring * gy + p.c_damper * rel * ey))
    return np.array(out)


def link_rates_oracle(boom, J, p):
    """Per-link Newton-Euler rates, plain loops."""
    n = boom.n_links
    rows = []
    for i in range(n):
        c, s = math.cos(boom.theta[i]), math.sin(boom.theta[i])
        f0 = (-J[i][0], -J[i][1])
        f1 = (J[i + 1][0], J[i + 1][1])
        fx, fy = f0[0] + f1[0], f0[1] + f1[1]
        vt, vn, w = boom.v_t[i], boom.v_n[i], boom.omega[i]
        ft = fx * c + fy * s - p.kappa_t_link * abs(vt) * vt
        fn = -fx * s + fy * c - p.kappa_l_link * abs(vn) * vn
        tq = (-p.kappa_w_link * abs(w) * w
              + 0.5 * p.link_length * ((f1[0] - f0[0]) * -s
                                       + (f1[1] - f0[1]) * c))
        rows.append((vt * c - vn * s, vt * s + vn * c, w,
                     ft / p.link_mass + vn * w,
                     fn / p.link_mass - vt * w,
                     tq / p.inertia))
    return np.array(rows).T


def single_link_boom(x, y, theta, p, vt=0.0, vn=0.0, omega=0.0):
    one = lambda v: np.array([float(v)])
    return BoomState(one(x), one(y), one(theta), one(vt), one(vn), one(omega))


def chain_gaps(duo, params):
    n = params.boom.n_links
    boom = _boom_view(duo.flat, n)
    N, M = boom.endpoints(params.boom.link_length)
    from spillfleet.dynamics.duo import _vessel_stern
    s1, _ = _vessel_stern(duo.flat[0:6], params.vessel.r)
    s2, _ = _vessel_stern(duo.flat[6:12], params.vessel.r)
    B = np.vstack([np.asarray(s1)[None, :], M])
    A = np.vstack([N, np.asarray(s2)[None, :]])
    return np.hypot(*(A - B).T)


def total_momentum(duo, params):
    """World linear momentum (px, py) and angular momentum about the origin."""
    vp, bp = params.vessel, params.boom
    px = py = lz = 0.0
    for base, (m, inertia) in (((0), (vp.m, vp.I)), ((6), (vp.m, vp.I))):
        x, y, th, u, v, w = duo.flat[base:base + 6]
        c, s = math.cos(th), math.sin(th)
        vx, vy = u * c - v * s, u * s + v * c
        px += m * vx
        py += m * vy
        lz += m * (x * vy - y * vx) + inertia * w
    boom = duo.boom
    c, s = np.cos(boom.theta), np.sin(boom.theta)
    vx = boom.v_t * c - boom.v_n * s
    vy = boom.v_t * s + boom.v_n * c
    px += bp.link_mass * vx.sum()
    py += bp.link_mass * vy.sum()
    lz += (bp.link_mass * (boom.x * vy - boom.y * vx)).sum()
    lz += bp.inertia * boom.omega.sum()
    return px, py, lz


class TestVessel:
    def test_rest_is_fixed(self):
        d = vessel_derivative(VesselState(), 0.0, 0.0, (0.0, 0.0), VP)
        assert d == (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def test_pure_surge_drag(self):
        # kappa_l |u| u / m = 100 * 1 / 600
        st = VesselState(u=1.0)
        d = vessel_derivative(st, 0.0, 0.0, (0.0, 0.0), VP)
        assert d[3] == pytest.approx(-1.0 / 6.0, abs=1e-15)
        assert d[0] == 1.0 and d[4] == 0.0 and d[5] == 0.0

    def test_thrust_moments(self):
        # steered thrust: sway gets -F sin(eta), yaw gets +r F sin(eta)
        st = VesselState()
        d = vessel_derivative(st, 1000.0, 0.5, (0.0, 0.0), VP)
        assert d[4] == pytest.approx(-1000.0 * math.sin(0.5) / VP.m)
        assert d[5] == pytest.approx(VP.r * 1000.0 * math.sin(0.5) / VP.I)

    def test_tow_sway_countertorque(self):
        # tow force acts at the stern: sway component f_lv turns the bow away
        st = VesselState()
        d = vessel_derivative(st, 0.0, 0.0, (0.0, 200.0), VP)
        assert d[4] == pytest.approx(200.0 / VP.m)
        assert d[5] == pytest.approx(-VP.r * 200.0 / VP.I)

    def test_against_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            vals = rng.normal(scale=2.0, size=6)
            F, eta = rng.uniform(-4000, 4000), rng.uniform(-1.5, 1.5)
            fl = tuple(rng.normal(scale=300.0, size=2))
            st = VesselState(*vals)
            got = vessel_derivative(st, F, eta, fl, VP)
            want = vessel_oracle(vals, F, eta, fl[0], fl[1], VP)
            assert got == pytest.approx(want, rel=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            vessel_derivative(VesselState(u=math.nan), 0.0, 0.0,
                              (0.0, 0.0), VP)

    def test_clamping(self):
        assert clamp_controls(9000.0, 2.0, VP) == (VP.F_max, VP.eta_max)
        assert clamp_controls(-9000.0, -2.0, VP) == (-VP.F_max, -VP.eta_max)
        assert clamp_controls(10.0, -0.2, VP) == (10.0, -0.2)

    def test_stern_geometry(self):
        st = VesselState(x=3.0, y=4.0, theta=math.pi / 2, u=1.0, v=0.5,
                         omega=0.25)
        px, py = stern_point(st, VP)
        assert (px, py) == pytest.approx((3.0, 4.0 - VP.r))
        # body stern velocity (u, v - w r) rotated by pi/2
        vx, vy = stern_velocity(st, VP)
        assert (vx, vy) == pytest.approx((-(0.5 - 0.25 * VP.r), 1.0))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            VesselParams(m=0.0).validate()
        with pytest.raises(ValueError):
            VesselParams(kappa_t=-1.0).validate()
        with pytest.raises(ValueError):
            VesselParams(eta_max=2.0).validate()
        VesselParams().validate()


class TestJointForces:
    def test_closed_chain_is_slack(self):
        p = BoomParams(n_links=6, total_length=12.0)
        boom = init_boom_between((0.0, 0.0), (9.0, 0.0), p)
        N, M = boom.endpoints(p.link_length)
        J = boom_joint_forces(boom, (((0.0, 0.0)), (0.0, 0.0)),
                              ((9.0, 0.0), (0.0, 0.0)), p)
        assert np.abs(J).max() < 1e-5  # k * sub-eps gaps only

    def test_hooke_gap(self):
        p = BoomParams(n_links=1, total_length=2.0)
        boom = single_link_boom(1.0, 0.0, 0.0, p)
        J = boom_joint_forces(boom, ((-0.1, 0.0), (0.0, 0.0)),
                              ((2.0, 0.0), (0.0, 0.0)), p)
        # left gap 0.1 m along +x; right joint exactly closed
        assert J[0] == pytest.approx((1000.0, 0.0))
        assert J[1] == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_damper_adds_along_gap(self):
        p = BoomParams(n_links=1, total_length=2.0)
        boom = single_link_boom(1.0, 0.0, 0.0, p)
        J = boom_joint_forces(boom, ((-0.1, 0.0), (-0.2, 0.0)),
                              ((2.0, 0.0), (0.0, 0.0)), p)
        # relative closing speed 0.2 projected on e = (1,0): 500 * 0.2 = 100
        assert J[0] == pytest.approx((1100.0, 0.0))

    def test_damper_transverse_velocity_ignored(self):
        p = BoomParams(n_links=1, total_length=2.0)
        boom = single_link_boom(1.0, 0.0, 0.0, p)
        J = boom_joint_forces(boom, ((-0.1, 0.0), (0.0, 5.0)),
                              ((2.0, 0.0), (0.0, 0.0)), p)
        assert J[0] == pytest.approx((1000.0, 0.0))

    def test_tiny_gap_zero_even_with_velocity(self):
        p = BoomParams(n_links=1, total_length=2.0)
        boom = single_link_boom(1.0, 0.0, 0.0, p)
        J = boom_joint_forces(boom, ((1e-12, 0.0), (-3.0, 0.0)),
                              ((2.0, 0.0), (0.0, 0.0)), p)
        assert J[0] == pytest.approx((0.0, 0.0), abs=0.0)

    def test_against_oracle(self):
        rng = np.random.default_rng(11)
        p = BoomParams(n_links=5, total_length=10.0)
        for _ in range(30):
            boom = BoomState(*(rng.normal(scale=1.5, size=5)
                               for _ in range(6)))
            s1 = (tuple(rng.normal(size=2)), tuple(rng.normal(size=2)))
            s2 = (tuple(rng.normal(size=2)), tuple(rng.normal(size=2)))
            got = boom_joint_forces(boom, s1, s2, p)
            want = joint_oracle(boom, s1, s2, p)
            assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


class TestLinkRates:
    def test_rest_slack_is_fixed(self):
        p = BoomParams(n_links=3, total_length=6.0)
        boom = init_boom_between((0.0, 0.0), (6.0, 0.0), p)
        d = boom_derivative(boom, np.zeros((4, 2)), p)
        assert all(np.all(part == 0.0) for part in d)

    def test_pure_couple(self):
        # equal joint forces along n_hat: zero net force, torque l * f
        p = BoomParams(n_links=1, total_length=1.0)
        boom = single_link_boom(0.5, 0.0, 0.0, p)
        f = 10.0
        J = np.array([[0.0, f], [0.0, f]])
        dx, dy, dth, dvt, dvn, dom = boom_derivative(boom, J, p)
        assert dvt[0] == 0.0 and dvn[0] == 0.0
        assert dom[0] == pytest.approx(p.link_length * f / p.inertia)
        assert dom[0] == pytest.approx(4.8)  # 1.0 * 10 / (25/12)

    def test_opposed_pull_is_pure_force(self):
        # J[0] = J[1] along the link axis: tension only, no turn, no net force
        p = BoomParams(n_links=1, total_length=1.0)
        boom = single_link_boom(0.5, 0.0, 0.0, p)
        J = np.array([[50.0, 0.0], [50.0, 0.0]])
        _, _, _, dvt, dvn, dom = boom_derivative(boom, J, p)
        assert dvt[0] == 0.0 and dvn[0] == 0.0 and dom[0] == 0.0

    def test_against_oracle(self):
        rng = np.random.default_rng(13)
        p = BoomParams(n_links=7, total_length=14.0)
        for _ in range(30):
            boom = BoomState(*(rng.normal(scale=1.5, size=7)
                               for _ in range(6)))
            J = rng.normal(scale=400.0, size=(8, 2))
            got = np.array(boom_derivative(boom, J, p))
            want = link_rates_oracle(boom, J, p)
            assert np.allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_non_finite_force_rejected(self):
        p = BoomParams(n_links=1, total_length=1.0)
        boom = single_link_boom(0.5, 0.0, 0.0, p)
        with pytest.raises(NumericError):
            boom_derivative(boom, np.array([[math.inf, 0.0], [0.0, 0.0]]), p)


class TestBoomInit:
    def test_straight_at_full_span(self):
        p = BoomParams(n_links=4, total_length=8.0)
        boom = init_boom_between((1.0, 1.0), (1.0 + 8.0, 1.0), p)
        assert np.allclose(boom.theta, 0.0)
        assert np.allclose(boom.x, 1.0 + np.array([1.0, 3.0, 5.0, 7.0]))
        assert np.allclose(boom.y, 1.0)

    def test_arc_closure_is_exact(self):
        p = BoomParams(n_links=9, total_length=18.0)
        for chord in (17.9, 15.0, 9.0, 3.0, 0.5):
            boom = init_boom_between((0.0, 0.0), (chord, 0.0), p)
            s1 = ((0.0, 0.0), (0.0, 0.0))
            s2 = ((chord, 0.0), (0.0, 0.0))
            J = boom_joint_forces(boom, s1, s2, p)
            assert np.abs(J).max() == 0.0, chord
            # every link keeps its rigid length
            N, M = boom.endpoints(p.link_length)
            lens = np.hypot(*(M - N).T)
            assert np.allclose(lens, p.link_length, rtol=1e-12)

    def test_bulge_follows_behind_hint(self):
        p = BoomParams(n_links=10, total_length=20.0)
        up = init_boom_between((0.0, 0.0), (10.0, 0.0), p, behind=(0.0, 1.0))
        down = init_boom_between((0.0, 0.0), (10.0, 0.0), p,
                                 behind=(0.0, -1.0))
        assert up.y.mean() > 0.5
        assert down.y.mean() < -0.5
        assert np.allclose(up.y, -down.y, atol=1e-12)

    def test_deep_fold_stays_closed(self):
        # chord much shorter than the boom: arc wraps past a half circle
        p = BoomParams(n_links=12, total_length=24.0)
        boom = init_boom_between((0.0, 0.0), (2.0, 0.0), p)
        s1 = ((0.0, 0.0), (0.0, 0.0))
        s2 = ((2.0, 0.0), (0.0, 0.0))
        assert np.abs(boom_joint_forces(boom, s1, s2, p)).max() == 0.0

    def test_overstretch_rejected(self):
        p = BoomParams(n_links=4, total_length=8.0)
        with pytest.raises(ConfigError):
            init_boom_between((0.0, 0.0), (8.1, 0.0), p)

    def test_coincident_sterns_rejected(self):
        p = BoomParams(n_links=4, total_length=8.0)
        with pytest.raises(ConfigError):
            init_boom_between((1.0, 2.0), (1.0, 2.0), p)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            BoomParams(n_links=0).validate()
        with pytest.raises(ValueError):
            BoomParams(k_spring=-1.0).validate()
        assert BoomParams(k_spring=0.0).dt_cap() == math.inf
        assert BoomParams().dt_cap() == pytest.approx(0.01)


def symmetric_duo(params, gap=16.0, velocity=(0.0, 0.0)):
    return make_duo((0.0, gap / 2, 0.0), (0.0, -gap / 2, 0.0), params,
                    velocity=velocity)


class TestDuo:
    def test_make_duo_closed_and_behind(self):
        p = DuoParams(boom=BoomParams(n_links=8, total_length=20.0))
        d = symmetric_duo(p)
        assert np.abs(chain_gaps(d, p)).max() < 1e-9
        # heading +x, so the slack bulges toward -x, behind the sterns
        assert d.boom.x.max() < -p.vessel.r
        assert np.abs(d.f_l_1).max() == 0.0

    def test_rest_fixed_point_is_exact(self):
        p = DuoParams(boom=BoomParams(n_links=6, total_length=18.0))
        d = symmetric_duo(p)
        d2 = step_n(d, (0.0, 0.0, 0.0, 0.0), 5e-3, 40, p)
        assert np.array_equal(d.flat, d2.flat)
        assert d2.t == pytest.approx(0.2)

    def test_step_matches_step_n(self):
        p = DuoParams(boom=BoomParams(n_links=4, total_length=16.0))
        ctrl = (1200.0, 0.2, 900.0, -0.1)
        a = symmetric_duo(p)
        for _ in range(10):
            a = step(a, ctrl, 4e-3, p)
        b = step_n(symmetric_duo(p), ctrl, 4e-3, 10, p)
        assert np.array_equal(a.flat, b.flat)

    def test_dt_guards(self):
        p = DuoParams()
        d = symmetric_duo(p)
        with pytest.raises(ConfigError):
            step(d, (0.0, 0.0, 0.0, 0.0), 0.0, p)
        with pytest.raises(ConfigError):
            step(d, (0.0, 0.0, 0.0, 0.0), 0.02, p)  # cap is 0.01

    def test_control_clamping_applied(self):
        p = DuoParams()
        ctrl_over = (1e6, 3.0, -1e6, -3.0)
        ctrl_lim = (p.vessel.F_max, p.vessel.eta_max,
                    -p.vessel.F_max, -p.vessel.eta_max)
        a = step_n(symmetric_duo(p), ctrl_over, 2e-3, 25, p)
        b = step_n(symmetric_duo(p), ctrl_lim, 2e-3, 25, p)
        assert np.array_equal(a.flat, b.flat)

    def test_separation_rejected_beyond_boom(self):
        p = DuoParams(boom=BoomParams(n_links=4, total_length=10.0))
        with pytest.raises(ConfigError):
            make_duo((0.0, 6.0, 0.0), (0.0, -6.0, 0.0), p)

    def test_divergence_detected(self):
        p = DuoParams(boom=BoomParams(n_links=2, total_length=16.0))
        d = symmetric_duo(p)
        d.flat[3] = 1e200
        with np.errstate(invalid="ignore", over="ignore"):
            with pytest.raises(NumericError):
                step(d, (0.0, 0.0, 0.0, 0.0), 1e-3, p)

    def test_vessel_blocks_match_vessel_derivative(self):
        p = DuoParams(boom=BoomParams(n_links=5, total_length=18.0))
        rng = np.random.default_rng(3)
        d = symmetric_duo(p)
        flat = d.flat + rng.normal(scale=0.2, size=d.flat.shape)
        ctrl = (800.0, 0.3, -400.0, -0.7)
        out = duo_derivative(flat, ctrl, p)
        f1, f2, _ = tow_forces(flat, p)
        for base, F, eta, fw in ((0, 800.0, 0.3, f1), (6, -400.0, -0.7, f2)):
            st = VesselState(*flat[base:base + 6])
            c, s = math.cos(st.theta), math.sin(st.theta)
            fl = (fw[0] * c + fw[1] * s, -fw[0] * s + fw[1] * c)
            want = vessel_derivative(st, F, eta, fl, p.vessel)
            assert out[base:base + 6] == pytest.approx(want, rel=1e-12)

    def test_boom_block_matches_boom_derivative(self):
        p = DuoParams(boom=BoomParams(n_links=5, total_length=18.0))
        rng = np.random.default_rng(4)
        d = symmetric_duo(p)
        flat = d.flat + rng.normal(scale=0.2, size=d.flat.shape)
        out = duo_derivative(flat, (500.0, 0.1, 300.0, -0.2), p)
        _, _, J = tow_forces(flat, p)
        want = np.concatenate(
            boom_derivative(_boom_view(flat, 5), J, p.boom))
        assert np.allclose(out[12:], want, rtol=1e-12, atol=1e-12)

    def test_reported_tensions_are_body_frame_joint_forces(self):
        p = DuoParams(boom=BoomParams(n_links=4, total_length=16.0))
        d = step_n(symmetric_duo(p), (2000.0, 0.0, 2000.0, 0.0), 2e-3, 200, p)
        f1w, f2w, _ = tow_forces(d.flat, p)
        th1, th2 = d.flat[2], d.flat[8]
        c1, s1 = math.cos(th1), math.sin(th1)
        assert d.f_l_1 == pytest.approx(
            (f1w[0] * c1 + f1w[1] * s1, -f1w[0] * s1 + f1w[1] * c1))
        c2, s2 = math.cos(th2), math.sin(th2)
        assert d.f_l_2 == pytest.approx(
            (f2w[0] * c2 + f2w[1] * s2, -f2w[0] * s2 + f2w[1] * c2))
        # towing forward loads both ends: drag pulls the tow points backward
        assert d.f_l_1[0] < -10.0 and d.f_l_2[0] < -10.0


class TestConvergenceAndConservation:
    def test_step_halving_fourth_order_when_smooth(self):
        # damper off and drag off leave pure Hooke coupling, so the
        # integrator's own order is visible: error ratio ~16 per halving
        p = DuoParams(
            vessel=VesselParams(kappa_l=0.0, kappa_t=0.0, kappa_w=0.0),
            boom=BoomParams(n_links=4, total_length=40.0, c_damper=0.0,
                            kappa_t_link=0.0, kappa_l_link=0.0,
                            kappa_w_link=0.0))
        ctrl = (3000.0, 0.3, 2500.0, -0.2)

        def final(dt):
            d = make_duo((0.0, 10.0, 0.2), (0.0, -10.0, -0.1), p)
            return step_n(d, ctrl, dt, round(2.0 / dt), p).flat

        a, b, c = final(2e-3), final(1e-3), final(5e-4)
        ratio = np.abs(a - b).max() / np.abs(b - c).max()
        assert 12.0 < ratio < 20.0

    def test_step_halving_converges_full_model(self):
        # |v|v drag and the gap-direction damper are only piecewise smooth,
        # so the full model converges at reduced order; halving the step
        # must still shrink the error by well over 2x
        p = DuoParams(boom=BoomParams(n_links=4, total_length=40.0))
        ctrl = (3000.0, 0.3, 2500.0, -0.2)

        def final(dt):
            d = make_duo((0.0, 10.0, 0.2), (0.0, -10.0, -0.1), p)
            return step_n(d, ctrl, dt, round(2.0 / dt), p).flat

        a, b, c = final(4e-3), final(2e-3), final(1e-3)
        e1 = np.abs(a - b).max()
        e2 = np.abs(b - c).max()
        assert e1 < 1e-4
        assert 2.5 < e1 / e2 < 30.0

    def test_total_energy_dissipates_unforced(self):
        p = DuoParams(boom=BoomParams(n_links=6, total_length=18.0))
        d = symmetric_duo(p, velocity=(1.5, 0.4))
        prev = kinetic_energy(d, p) + spring_energy(d, p)
        assert prev == pytest.approx(
            0.5 * (2 * 600.0 + 6 * 25.0) * (1.5 ** 2 + 0.4 ** 2))
        for _ in range(80):
            d = step_n(d, (0.0, 0.0, 0.0, 0.0), 5e-3, 10, p)
            e = kinetic_energy(d, p) + spring_energy(d, p)
            assert e <= prev * (1.0 + 1e-9)
            prev = e
        assert prev < 100.0  # mostly dead after 4 s of drag

    def test_momentum_conserved_without_drag(self):
        # spring and damper act along the joint gap on coincident points,
        # so with drag off both linear and angular momentum are invariants
        p = DuoParams(
            vessel=VesselParams(kappa_l=0.0, kappa_t=0.0, kappa_w=0.0),
            boom=BoomParams(n_links=5, total_length=18.0,
                            kappa_t_link=0.0, kappa_l_link=0.0,
                            kappa_w_link=0.0))
        d = symmetric_duo(p, velocity=(0.8, 0.3))
        d.flat[3] += 0.5     # vessel 1 surge kick
        d.flat[10] -= 0.3    # vessel 2 sway kick
        d.flat[12 + 5 * 3] += 0.4  # one link's tangential kick
        p0 = total_momentum(d, p)
        d = step_n(d, (0.0, 0.0, 0.0, 0.0), 1e-3, 5000, p)
        p1 = total_momentum(d, p)
        # momentum is nonlinear in the body-frame state, so RK4 keeps it
        # only to truncation error; a pairing or sign bug drifts ~1e9x this
        scale = max(1.0, max(abs(v) for v in p0))
        assert abs(p1[0] - p0[0]) / scale < 3e-9
        assert abs(p1[1] - p0[1]) / scale < 3e-9
        assert abs(p1[2] - p0[2]) / scale < 3e-9
        # something actually moved
        assert not np.allclose(d.flat[:12], symmetric_duo(p).flat[:12])

    def test_mirror_symmetry(self):
        p = DuoParams(boom=BoomParams(n_links=6, total_length=22.0))
        a = make_duo((0.0, 9.0, 0.15), (0.0, -9.0, -0.3), p)
        b = make_duo((0.0, -9.0, -0.15), (0.0, 9.0, 0.3), p)
        a = step_n(a, (2500.0, 0.25, 1500.0, -0.4), 2e-3, 400, p)
        b = step_n(b, (2500.0, -0.25, 1500.0, 0.4), 2e-3, 400, p)
        n = 6
        for base in (0, 6):
            x, y, th, u, v, w = a.flat[base:base + 6]
            mx, my, mth, mu, mv, mw = b.flat[base:base + 6]
            assert (mx, my, mth) == pytest.approx((x, -y, -th), abs=1e-10)
            assert (mu, mv, mw) == pytest.approx((u, -v, -w), abs=1e-10)
        ab, bb = a.boom, b.boom
        assert np.allclose(bb.x, ab.x, atol=1e-10)
        assert np.allclose(bb.y, -ab.y, atol=1e-10)
        assert np.allclose(bb.v_t, ab.v_t, atol=1e-10)
        assert np.allclose(bb.v_n, -ab.v_n, atol=1e-10)
        assert np.allclose(bb.omega, -ab.omega, atol=1e-10)

    def test_towed_chain_tracks_the_vessels(self):
        # hard symmetric tow for 8 s: the chain follows and no joint ever
        # stretches much past the static bound F / k (plus jerk overshoot)
        p = DuoParams(boom=BoomParams(n_links=10, total_length=30.0))
        d = symmetric_duo(p, gap=24.0)
        F = 4000.0
        for _ in range(40):
            d = step_n(d, (F, 0.0, F, 0.0), 5e-3, 40, p)
            assert chain_gaps(d, p).max() < 2.0 * F / p.boom.k_spring
        # open-loop towing splays the pair outward, but the duo still
        # advances and drags the chain along
        assert d.vessel_1.x > 8.0
        assert d.boom.x.mean() > 2.0
        assert d.vessel_1.theta == pytest.approx(-d.vessel_2.theta, abs=1e-6)

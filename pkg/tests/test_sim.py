import dataclasses

import numpy as np
import pytest

from gridfreq.netmodel import (
    AreaParams,
    LoadScenario,
    LoadStep,
    PidGains,
    TorqueMatrix,
    load_network,
    network_from_dict,
)
from gridfreq.sim import (
    AuditError,
    ScatteringConfig,
    SimulationError,
    closed_loop_eigen_oracle,
    energy_audit,
    integrate_linear,
    load_grid,
    model_for,
    rk4_propagator,
    simulate,
    simulate_hierarchical,
    simulate_lfc,
    simulate_swing,
    swing_model,
)
from gridfreq.tfalg import local_agent_tf

NO_LOADS = LoadScenario((), 20.0)


@pytest.fixture(scope="module")
def hier():
    return load_network("appendix1.json")


@pytest.fixture(scope="module")
def light():
    return load_network("appendix2.json")


def swing_net(base, a=1.0, b=0.5):
    return base.replace(mode="swing_pi", local_pids=(PidGains(a, b),) * base.n)


def zero_delay(net):
    return net.replace(delays_up=(0.0,) * net.n, delays_down=(0.0,) * net.n)


# -- integrator ----------------------------------------------------------------

def test_rk4_propagator_scalar():
    a, h = -2.0, 0.1
    Phi, (G0, Gh, G1) = rk4_propagator(np.array([[a]]), h)
    z = a * h
    assert abs(Phi[0, 0] - (1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24)) < 1e-15
    # constant input: x' = a x + 1 from 0 gives h (1 + z/2 + z^2/6 + z^3/24)
    step = (G0 + Gh + G1)[0, 0]
    assert abs(step - h * (1 + z / 2 + z**2 / 6 + z**3 / 24)) < 1e-15
    assert abs(step - (np.exp(z) - 1) / a) < abs(z) ** 5 / 120 / abs(a) * 1.2


def test_rk4_matches_classical_stages():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4))
    h = 0.05
    x = rng.normal(size=4)
    b0, bh, b1 = rng.normal(size=(3, 4))
    f = lambda y, b: A @ y + b
    k1 = f(x, b0)
    k2 = f(x + h / 2 * k1, bh)
    k3 = f(x + h / 2 * k2, bh)
    k4 = f(x + h * k3, b1)
    ref = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    Phi, (G0, Gh, G1) = rk4_propagator(A, h)
    np.testing.assert_allclose(Phi @ x + G0 @ b0 + Gh @ bh + G1 @ b1, ref, rtol=1e-13)


def test_load_grid_right_continuous():
    sc = LoadScenario((LoadStep(0.5, 2, 0.3),), 1.0)
    t = np.arange(11) * 0.1
    p = load_grid(sc, 3, t)
    assert (p[:5] == 0).all() and (p[5:, 1] == 0.3).all() and (p[:, [0, 2]] == 0).all()


# -- swing ---------------------------------------------------------------------

def test_swing_zero_loads(hier):
    tr = simulate_swing(swing_net(hier), NO_LOADS)
    assert not tr.omega.any() and not tr.delta.any()


def test_swing_converges(hier):
    net = swing_net(hier)
    tr = simulate_swing(net, LoadScenario((LoadStep(10.0, 3, 0.01),), 100.0))
    assert tr.completed
    assert tr.max_abs("omega", 80.0) < 1e-5
    assert closed_loop_eigen_oracle(net).abscissa < 0


def test_swing_starts_at_rest_and_integrates_phase(hier):
    tr = simulate_swing(swing_net(hier), LoadScenario((LoadStep(1.0, 3, 0.01),), 10.0))
    assert not tr.omega[0].any() and not tr.delta[0].any()
    d_dot = (tr.delta[2:] - tr.delta[:-2]) / (2 * tr.step)
    assert np.abs(d_dot - tr.omega[1:-1])[1500:].max() < 1e-7


def test_single_area_static_gain():
    net = network_from_dict({"areas": [{"M": 1.0, "D": 1.0}], "torque": [[0.0]],
                             "control": {"mode": "swing_pi", "pids": [{"kp": 0, "ki": 0}]}})
    tr = simulate_swing(net, LoadScenario((LoadStep(0.0, 1, 1.0),), 30.0))
    assert abs(tr.omega[-1, 0] + 1.0) < 1e-9
    assert abs(tr.omega[1000, 0] - (np.exp(-1.0) - 1)) < 1e-9


def test_blow_up_is_reported(hier):
    tr = simulate_swing(swing_net(hier, a=-8.0, b=0.5), LoadScenario((LoadStep(0.0, 3, 0.01),), 100.0))
    assert tr.status == "diverged"
    assert "numerical blow-up" in tr.message
    assert np.abs(tr.omega[-1]).max() > 10


def test_step_limit(hier):
    with pytest.raises(SimulationError):
        simulate_swing(swing_net(hier), NO_LOADS, step=0.02)


def test_mode_checks(hier, light):
    with pytest.raises(SimulationError):
        simulate_swing(hier, NO_LOADS)
    with pytest.raises(SimulationError):
        simulate_lfc(hier, NO_LOADS)
    with pytest.raises(SimulationError):
        simulate_hierarchical(light, NO_LOADS)
    with pytest.raises(SimulationError):
        simulate(hier, "bogus")


def test_lossless_storage_conserved():
    rng = np.random.default_rng(8)
    n = 5
    M = rng.uniform(2, 6, n)
    T = TorqueMatrix.from_couplings(n, {(i, j): rng.uniform(0.05, 0.5)
                                        for i in range(n) for j in range(i + 1, n)}).entries
    model = swing_model(M, np.zeros(n), T, np.zeros(n), np.zeros(n))
    h = 1e-3
    t = np.arange(100_001) * h
    x0 = np.concatenate([np.zeros(n), rng.normal(scale=0.01, size=n)])
    X, blow = integrate_linear(model, t, np.zeros((len(t), n)), x0)
    assert blow is None
    w, d = X[:, model.omega], X[:, model.delta]
    S = 0.5 * np.einsum("ki,i,ki->k", w, M, w) + 0.5 * np.einsum("ki,ij,kj->k", d, T, d)
    assert np.abs(S - S[0]).max() <= 1e-6 * S[0]


# -- LFC -----------------------------------------------------------------------

def test_lfc_zero_loads(light):
    tr = simulate_lfc(light, NO_LOADS)
    assert not tr.omega.any() and not tr.ace.any()


def test_lfc_signal_definitions(light):
    tr = simulate_lfc(light, LoadScenario((LoadStep(1.0, 3, 0.01),), 5.0))
    T = light.torque.entries
    B = np.array([a.B for a in light.areas])
    np.testing.assert_allclose(tr.ptl, tr.delta @ T.T, atol=1e-15)
    np.testing.assert_allclose(tr.ace, tr.ptl + tr.omega * B, atol=1e-15)


@pytest.mark.parametrize("name", ["appendix2.json", "appendix3.json"])
def test_lfc_converges(name):
    tr = simulate_lfc(load_network(name))
    assert tr.completed
    assert tr.max_abs("omega", 80.0) < 1e-4


def test_isolated_area_oracle_matches_agent_poles(light):
    net = light.replace(areas=light.areas[:1], torque=TorqueMatrix(np.zeros((1, 1))),
                        local_pids=light.local_pids[:1], loads=None)
    eigs = closed_loop_eigen_oracle(net).eigenvalues
    h = local_agent_tf(net.areas[0], net.local_pids[0])
    ref = np.roots(h.den[:-1])
    # the isolated loop has the agent poles plus the decoupled phase integrator
    got = np.sort_complex(np.delete(eigs, np.argmin(np.abs(eigs))))
    np.testing.assert_allclose(got, np.sort_complex(ref), rtol=1e-8)


def test_oracle_detects_destabilized_area(light):
    pids = list(light.local_pids)
    p = pids[0]
    pids[0] = PidGains(p.kp, -p.ki, p.kd, p.tau_d)
    res = closed_loop_eigen_oracle(light.replace(local_pids=tuple(pids)))
    assert res.abscissa > 0


def test_oracle_state_sizes(hier, light):
    assert closed_loop_eigen_oracle(light).eigenvalues.size == 60
    assert closed_loop_eigen_oracle(hier).eigenvalues.size == 21
    assert closed_loop_eigen_oracle(swing_net(hier)).eigenvalues.size == 20


# -- hierarchical --------------------------------------------------------------

def test_hierarchical_zero_delay_scattering_identity(hier):
    net = zero_delay(hier)
    loads = LoadScenario((LoadStep(1.0, 3, 0.01), LoadStep(2.0, 8, -0.01)), 30.0)
    on = simulate_hierarchical(net, loads, ScatteringConfig.from_network(net, True, 0.6))
    off = simulate_hierarchical(net, loads, ScatteringConfig.from_network(net, False))
    assert np.abs(on.omega - off.omega).max() <= 1e-6
    assert np.abs(on.omega - off.omega).max() <= 1e-12


def test_hierarchical_zero_delay_matches_linear_model(hier):
    net = zero_delay(hier)
    loads = LoadScenario((LoadStep(1.0, 5, 0.01),), 20.0)
    tr = simulate_hierarchical(net, loads, ScatteringConfig.from_network(net, False))
    model = model_for(net)
    p = load_grid(loads, net.n, tr.t)
    X, _ = integrate_linear(model, tr.t, p)
    np.testing.assert_allclose(tr.omega, X[:, model.omega], atol=1e-12)


def test_hierarchical_zero_loads(hier):
    tr = simulate_hierarchical(hier, NO_LOADS)
    assert not tr.omega.any()
    assert all(not w.any() for w in tr.waves.values())


def test_hierarchical_scattering_run(hier):
    tr = simulate_hierarchical(hier)
    assert tr.completed
    assert tr.max_abs("omega", 80.0) < 1e-4
    assert tr.scattering_supply is not None
    assert tr.scattering_supply.min() >= -1e-9
    assert set(tr.waves) >= {"p_mg", "u_l", "v_l", "u_r", "v_r", "u_g", "v_g"}


def test_aggregation_choice_matters(hier):
    loads = LoadScenario((LoadStep(1.0, 3, 0.01),), 20.0)
    mean = simulate_hierarchical(hier, loads)
    summed = simulate_hierarchical(hier.replace(aggregation="sum"), loads)
    assert np.abs(mean.omega - summed.omega).max() > 1e-6


def test_delay_shorter_than_step_rejected(hier):
    net = hier.replace(delays_up=(1e-4,) * hier.n)
    with pytest.raises(SimulationError):
        simulate_hierarchical(net, NO_LOADS)


def test_scattering_config_checks(hier):
    with pytest.raises(SimulationError):
        ScatteringConfig(0.0, (0.1,), (0.1,), True)
    with pytest.raises(SimulationError):
        ScatteringConfig(0.6, (-0.1,), (0.1,), True)
    cfg = ScatteringConfig.from_network(hier)
    assert cfg.enabled and cfg.alpha == 0.6 and len(cfg.delays_up) == 10
    with pytest.raises(SimulationError):
        ScatteringConfig.from_network(hier.replace(scattering_alpha=None), True)


# -- oracle versus simulation --------------------------------------------------

def random_swing(rng):
    n = int(rng.integers(2, 6))
    while True:
        areas = tuple(AreaParams(rng.uniform(1, 6), rng.uniform(0.5, 6)) for _ in range(n))
        T = TorqueMatrix.from_couplings(n, {(i, j): rng.uniform(0, 1)
                                            for i in range(n) for j in range(i + 1, n)})
        a = rng.uniform(-8, 2, n)
        b = rng.uniform(-0.5, 1.0, n)
        pids = tuple(PidGains(x, y) for x, y in zip(a, b))
        net = network_from_dict({"areas": [{"M": 1, "D": 1}] * n, "torque": np.zeros((n, n)).tolist(),
                                 "control": {"mode": "swing_pi",
                                             "pids": [{"kp": 1, "ki": 1}] * n}})
        net = dataclasses.replace(net, areas=areas, torque=T, local_pids=pids)
        absc = closed_loop_eigen_oracle(net).abscissa
        if abs(absc) > 0.05:
            return net, absc


def test_oracle_predicts_simulation():
    rng = np.random.default_rng(99)
    outcomes = []
    for _ in range(20):
        net, absc = random_swing(rng)
        tr = simulate_swing(net, LoadScenario((LoadStep(1.0, 1, 0.01),), 300.0), step=1e-2)
        peak = np.abs(tr.omega).max()
        tail = np.abs(tr.omega[-500:]).max()
        converged = tr.completed and tail < 1e-3 * peak
        outcomes.append(absc < 0)
        assert converged == (absc < 0), (absc, tr.status, tail, peak)
    assert any(outcomes) and not all(outcomes)


# -- audits --------------------------------------------------------------------

def test_audit_zero_trace(hier):
    tr = simulate_swing(swing_net(hier), NO_LOADS)
    rep = energy_audit(tr)
    assert not tr.storage.any()
    assert rep.balance_residual == 0.0 and rep.passed


def test_audit_swing_balance(hier):
    tr = simulate_swing(swing_net(hier), LoadScenario((LoadStep(1.0, 3, 0.01),), 20.0))
    rep = energy_audit(tr)
    assert rep.balance_residual <= 1e-6
    assert rep.osp_ok and rep.osp_margin == min(a.D for a in hier.areas)
    assert rep.scattering_ok is None


def test_audit_refuses_coarse_grid(hier):
    tr = simulate_swing(swing_net(hier), NO_LOADS, step=1e-2)
    coarse = dataclasses.replace(tr, step=0.02)
    with pytest.raises(AuditError, match="insufficient resolution"):
        energy_audit(coarse)


def test_audit_detects_corrupted_trace(hier):
    tr = simulate_swing(swing_net(hier), LoadScenario((LoadStep(1.0, 3, 0.01),), 20.0))
    bad = dataclasses.replace(tr, power=tr.power * 1.5)
    assert not energy_audit(bad).balance_ok


# -- output --------------------------------------------------------------------

def test_trace_csv(tmp_path, hier):
    tr = simulate_hierarchical(hier, LoadScenario((LoadStep(1.0, 3, 0.01),), 2.0))
    path = tmp_path / "trace.csv"
    tr.to_csv(path, every=10)
    lines = path.read_text().splitlines()
    head = lines[0].split(",")
    assert head[:2] == ["t", "omega_1"]
    assert head[1 + 4 * 10:1 + 4 * 10 + 3] == ["S", "supply", "dissipation"]
    assert head[-1] == "scattering_supply"
    assert len(lines) == 1 + 201
    tr.to_csv(tmp_path / "again.csv", every=10)
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()

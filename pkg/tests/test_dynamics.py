import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from entengine import builder as b
from entengine import dynamics as d
from entengine import qcore
from entengine.filtering import population_ratios


def random_hermitian_unit_trace(dim, rng):
    h = qcore.random_hermitian(dim, rng)
    return h - (np.trace(h).real - 1) / dim * np.eye(dim)


def single_qutrit(t, delta=(1.0, 2.5), rate=1e-3):
    target = b.TargetState.from_terms([("1", 1)])
    return b.MachineSpec(target, (2,), b.EnergySpec((delta[0],), (delta[1],)), b.BathSpec((t,), (rate,)), 0.0)


SWEEP_POINT = dict(t_hot=2.0, t_cold=0.3, gamma_h=1e-4, gamma_c=5e-3, g=1.6e-3)


# ---------------------------------------------------------------- Liouvillian invariants

@pytest.mark.parametrize("model", ["reset", "lindblad"])
def test_trace_annihilation_and_hermiticity(model):
    spec = b.ghz_machine(3, **SWEEP_POINT)
    liou = d.build_liouvillian(spec, model)
    rng = np.random.default_rng(12)
    for _ in range(100):
        rho = random_hermitian_unit_trace(27, rng)
        out = d.apply_liouvillian(liou, rho)
        assert abs(np.trace(out)) <= 1e-10
        assert qcore.hermiticity_error(out) <= 1e-10


def test_reset_superop_matches_partial_trace_oracle():
    rng = np.random.default_rng(13)
    dims = [3, 3]
    tau = b.thermal_state(1, 2.5, 0.8)
    rho = qcore.random_density(9, rng)
    for site in (0, 1):
        expect = qcore.insert_site(qcore.partial_trace(rho, dims, site), tau, dims, site)
        got = d.apply_liouvillian(d.reset_superop(tau, site, dims), rho)
        assert np.allclose(got, expect, atol=1e-15)


def test_reset_single_qutrit_relaxes_to_thermal():
    for t in (0.0, 0.7, math.inf):
        spec = single_qutrit(t)
        rho = d.steady_state(d.reset_liouvillian(spec))
        assert np.allclose(rho, spec.thermal_states()[0], atol=1e-12)


def test_reset_dissipator_vanishes_on_thermal_product():
    spec = b.bell_machine(t_hot=3.0, t_cold=0.4)
    tau = qcore.kron(*spec.thermal_states())
    full = d.apply_liouvillian(d.reset_liouvillian(spec), tau)
    coherent = d.apply_liouvillian(d.hamiltonian_superop(spec.hamiltonian()), tau)
    assert np.allclose(full, coherent, atol=1e-15)


def test_lindblad_zero_temperature_has_no_upward_rates():
    assert d.bose_einstein(1.0, 0.0) == 0.0
    assert d.jump_rates(2e-3, 1.0, 0.0) == (0.0, 2e-3)
    up, down = d.jump_rates(1.0, 1.0, 0.5)
    assert np.isclose(up / down, math.exp(-2.0))  # detailed balance
    assert d.jump_rates(1e-3, 1.0, math.inf) == (1e-3, 1e-3)


def test_lindblad_single_qutrit_gibbs():
    spec = single_qutrit(0.6)
    jumps = d.JumpConfig((((0, 1), (1, 2)),))
    rho = d.steady_state(d.lindblad_liouvillian(spec, jumps))
    assert np.allclose(rho, b.thermal_state(1.0, 2.5, 0.6), atol=1e-12)


def test_jump_config_validation():
    with pytest.raises(ValueError):
        d.JumpConfig((((0, 0),),))
    with pytest.raises(ValueError):
        d.JumpConfig((((0, 1),),), rates=(0.0,))
    cfg = d.JumpConfig.default(3)
    assert cfg.transitions[0] == ((0, 1), (0, 2))
    assert json.loads(json.dumps(cfg.to_dict()))["transitions"][0] == [[0, 1], [0, 2]]
    with pytest.raises(ValueError):
        d.build_liouvillian(b.ghz_machine(3), "other")


def test_sweep_parameters_give_valid_liouvillian():
    spec = b.ghz_machine(3, **SWEEP_POINT)
    liou = d.lindblad_liouvillian(spec)
    rho = d.steady_state(liou)
    assert qcore.is_density_operator(rho, spec.dims)
    assert d.residual(liou, rho) <= 1e-9


def test_parts_assembly_matches_direct_build():
    spec = b.ghz_machine(3, **SWEEP_POINT)
    for model in ("reset", "lindblad"):
        parts = d.LiouvillianParts(spec, model)
        direct = d.build_liouvillian(spec.with_couplings(2e-4, 3e-3, 7e-4), model)
        assert abs(parts.for_couplings(2e-4, 3e-3, 7e-4) - direct).max() <= 1e-18


# ---------------------------------------------------------------- steady state

def all_presets():
    return [b.ghz_machine(n) for n in (2, 3, 4)] + [
        b.dicke_machine(3, 1), b.dicke_machine(4, 2), b.cluster_machine(), b.bell_machine(),
        b.ghz_machine(3, **SWEEP_POINT)]


@pytest.mark.parametrize("model", ["reset", "lindblad"])
def test_preset_residuals(model):
    for spec in all_presets():
        liou = d.build_liouvillian(spec, model)
        rho = d.steady_state(liou)
        assert d.residual(liou, rho) <= 1e-9
        assert qcore.is_density_operator(rho, spec.dims)


def test_uncoupled_machine_is_thermal_product():
    spec = b.ghz_machine(3, t_hot=5.0, t_cold=0.3, g=0.0)
    rho = d.solve_machine(spec)
    assert np.allclose(rho, qcore.kron(*spec.thermal_states()), atol=1e-12)


def test_steady_state_scale_invariance():
    spec = b.ghz_machine(3)
    rho = d.solve_machine(spec)
    c = spec.couplings()
    for factor in (0.1, 3.0):
        scaled = spec.with_couplings(factor * c["gamma_h"], factor * c["gamma_c"], factor * c["g"])
        assert np.max(np.abs(d.solve_machine(scaled) - rho)) <= 1e-9


def test_steady_state_deterministic():
    spec = b.ghz_machine(4)
    assert np.array_equal(d.solve_machine(spec), d.solve_machine(spec))


def test_degenerate_steady_state_is_reported():
    # no dissipation: every energy eigenprojector is stationary
    spec = b.ghz_machine(2)
    with pytest.raises(d.DegenerateSteadyStateError):
        d.steady_state(d.hamiltonian_superop(spec.hamiltonian()))
    # two decoupled, individually stationary populations
    with pytest.raises(d.DegenerateSteadyStateError):
        d.steady_state(sp.csr_matrix((4, 4), dtype=complex))


def test_capacity_error():
    target = b.TargetState.from_terms([("100000", 1), ("011111", 1)])
    with pytest.raises(b.CapacityError):
        b.MachineSpec(target, (2, 0, 0, 0, 0, 0), b.EnergySpec((1,) * 6, (2,) * 6),
                      b.BathSpec((0,) * 6, (1,) * 6), 0.0)


def test_population_ratio_law():
    spec = b.ghz_machine(3)
    gc = spec.couplings()["gamma_c"]
    for ratio in (1e-2, 1e-3):
        s = spec.with_couplings(gamma_h=ratio * gc)
        rho = d.solve_machine(s)
        for _, _, measured, predicted in population_ratios(s, rho):
            assert abs(measured / predicted - 1) <= 1e-2


# ---------------------------------------------------------------- time evolution

def test_evolve_zero_generator():
    rho0 = qcore.random_density(4, np.random.default_rng(14))
    out = d.evolve(sp.csr_matrix((16, 16), dtype=complex), rho0, 3.0, 0.5)
    assert np.array_equal(out, rho0)


def test_evolve_unitary_conserves_purity():
    spec = b.ghz_machine(2)
    liou = d.hamiltonian_superop(spec.hamiltonian())
    v = np.zeros(9, dtype=complex)
    v[[2, 4]] = [0.6, 0.8]
    rho = d.evolve(liou, np.outer(v, v), 20.0, 0.01)
    assert abs(np.trace(rho @ rho).real - 1) <= 1e-8


def test_evolve_rejects_unstable_step():
    liou = d.build_liouvillian(b.bell_machine())
    with pytest.raises(d.IntegrationError):
        d.evolve(liou, np.eye(9) / 9, 1.0, 1.0)


def test_interaction_picture_matches_lab_frame():
    spec = b.bell_machine()
    rho0 = qcore.random_density(9, np.random.default_rng(15))
    t = 4.0
    lab = d.evolve(d.build_liouvillian(spec), rho0, t, 0.002)
    rot = d.evolve(d.interaction_picture_liouvillian(spec), rho0, t, 0.002)
    u = np.diag(np.exp(-1j * np.diag(spec.h_free()).real * t))
    assert np.max(np.abs(u @ rot @ u.conj().T - lab)) <= 1e-10


def test_time_evolution_reaches_linear_solve():
    spec = b.bell_machine()
    rho_inf = d.solve_machine(spec)
    gen = d.interaction_picture_liouvillian(spec)
    rates = spec.baths.rates
    dt = min(0.05 / max(rates), d._rk4_stable_dt(gen))
    rho_t = d.evolve(gen, np.eye(9) / 9, 30 / min(rates), dt)
    assert np.max(np.abs(rho_t - rho_inf)) <= 1e-7


# ---------------------------------------------------------------- export

def test_state_json_roundtrip(tmp_path):
    rho = d.solve_machine(b.bell_machine())
    path = tmp_path / "s.json"
    d.save_state(rho, path, model="reset")
    doc = json.loads(path.read_text())
    assert doc["dim"] == 9 and doc["model"] == "reset"
    assert np.array_equal(d.state_from_dict(doc), rho)

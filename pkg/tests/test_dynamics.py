import numpy as np
import pytest

from zaklab.grid import Grid, quadrature, sobolev_norms
from zaklab.profiles import MultiSolitonConfig, SolitonParams, traveling_wave
from zaklab.dynamics import (
    BlowUpError,
    State,
    Trajectory,
    backward_construct,
    evolve,
    multi_soliton_state,
    soliton_state,
    step,
    time_reverse,
)
from zaklab.functionals import energy, mass, momentum

SEED = 42


def _l2(grid, f):
    return np.sqrt(quadrature(grid, np.abs(f) ** 2))


def _state_gap(a: State, b: State) -> float:
    return sobolev_norms(a.grid, a.u - b.u, a.n - b.n, a.v - b.v)["bold_H"]


# --- State / Trajectory plumbing -------------------------------------------

def test_state_copy_is_independent():
    g = Grid(128, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.0))
    c = s.copy()
    c.u[:] = 0.0
    assert np.max(np.abs(s.u)) > 1.0


def test_state_shape_validation():
    g = Grid(128, 40.0)
    with pytest.raises(ValueError):
        State(g, 0.0, np.zeros(64, dtype=complex), np.zeros(128), np.zeros(128))


def test_trajectory_accessors():
    g = Grid(128, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.0))
    traj = evolve(s, 0.01, 1e-3, sample_stride=5)
    assert len(traj) >= 2
    assert traj.times[0] == 0.0
    assert traj.final.t == pytest.approx(0.01)
    assert [st.t for st in traj] == list(traj.times)


# --- single-step and scheme variants ----------------------------------------

@pytest.mark.parametrize("scheme", ("strang", "lie", "bcb"))
def test_step_conserves_u_mass(scheme):
    g = Grid(512, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.4))
    out = step(s, 1e-3, scheme=scheme)
    assert mass(out) == pytest.approx(mass(s), rel=1e-13)
    assert out.t == pytest.approx(1e-3)


def test_step_rejects_unknown_scheme():
    g = Grid(128, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.0))
    with pytest.raises(ValueError):
        step(s, 1e-3, scheme="rk4")


def test_strang_is_second_order_on_traveling_wave():
    g = Grid(1024, 40.0)
    p = SolitonParams(1.0, 0.5)
    s = soliton_state(g, p)
    errs = []
    for dt in (2e-3, 1e-3, 5e-4):
        traj = evolve(s, 0.5, dt, sample_stride=10**9)
        exact_u, _, _ = traveling_wave(g, p, traj.final.t)
        errs.append(_l2(g, traj.final.u - exact_u))
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_lie_variant_is_first_order_for_nonzero_v():
    # the literal half-kick sequencing drops to first order once v couples
    g = Grid(1024, 40.0)
    p = SolitonParams(1.0, 0.5)
    s = soliton_state(g, p)
    errs = []
    for dt in (2e-3, 1e-3):
        traj = evolve(s, 0.5, dt, scheme="lie", sample_stride=10**9)
        exact_u, _, _ = traveling_wave(g, p, traj.final.t)
        errs.append(_l2(g, traj.final.u - exact_u))
    assert 1.5 < errs[0] / errs[1] < 2.5


# --- exactness and conservation ---------------------------------------------

def test_standing_wave_is_near_exact():
    g = Grid(1024, 40.0)
    p = SolitonParams(1.0, 0.0)
    traj = evolve(soliton_state(g, p), 1.0, 1e-3, sample_stride=10**9)
    exact_u, exact_n, exact_v = traveling_wave(g, p, 1.0)
    assert _l2(g, traj.final.u - exact_u) < 1e-6
    # the n-component picks up a larger splitting constant than u
    assert _l2(g, traj.final.n - exact_n) < 5e-6


def test_moving_soliton_conserved_quantities():
    g = Grid(1024, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.5))
    traj = evolve(s, 2.0, 1e-3, sample_stride=200)
    m0, e0, p0 = mass(s), energy(s), momentum(s)
    for st in traj:
        assert abs(mass(st) - m0) / m0 < 1e-12
        assert abs(energy(st) - e0) < 1e-7
        assert abs(momentum(st) - p0) < 1e-7


def test_evolve_refuses_past_targets():
    g = Grid(512, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.3), t=1.0)
    with pytest.raises(ValueError, match="time_reverse"):
        evolve(s, 0.0, 1e-3)


def test_backward_run_via_time_reverse():
    # integrating the reversed state forward realizes the backward solution
    g = Grid(512, 40.0)
    p = SolitonParams(1.0, 0.3)
    s = soliton_state(g, p, t=1.0)
    traj = evolve(time_reverse(s), 0.0, 1e-3, sample_stride=10**9)
    rec = time_reverse(traj.final)
    exact_u, _, _ = traveling_wave(g, p, 0.0)
    assert rec.t == pytest.approx(0.0, abs=1e-12)
    assert _l2(g, rec.u - exact_u) < 1e-6


def test_time_reverse_is_involution_and_symmetry():
    g = Grid(512, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.4), t=0.3)
    r = time_reverse(s)
    assert r.t == pytest.approx(-0.3)
    assert np.array_equal(r.u, np.conj(s.u))
    assert np.array_equal(r.n, s.n)
    assert np.array_equal(r.v, -s.v)
    rr = time_reverse(r)
    assert rr.t == pytest.approx(0.3)
    assert np.array_equal(rr.u, s.u)


def test_round_trip_forward_backward():
    g = Grid(512, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.5))
    fwd = evolve(s, 0.5, 1e-3, sample_stride=10**9)
    back = evolve(time_reverse(fwd.final), 0.0, 1e-3, sample_stride=10**9)
    rec = time_reverse(back.final)
    assert _state_gap(rec, s) < 1e-6


def test_blowup_detection():
    g = Grid(256, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.0))
    with pytest.raises(BlowUpError) as err:
        evolve(s, 1.0, 1e-3, blowup_threshold=1.0)
    assert err.value.norm > 1.0


def test_dealias_flag_changes_nothing_for_smooth_data():
    g = Grid(1024, 40.0)
    s = soliton_state(g, SolitonParams(1.0, 0.3))
    a = evolve(s, 0.1, 1e-3, sample_stride=10**9, dealias=True).final
    b = evolve(s, 0.1, 1e-3, sample_stride=10**9, dealias=False).final
    assert _state_gap(a, b) < 1e-9


# --- backward multi-soliton construction ------------------------------------

def test_backward_construct_endpoints(backward_run):
    grid, cfg, traj = backward_run
    assert traj.times[0] == pytest.approx(0.0, abs=1e-12)
    assert traj.times[-1] == pytest.approx(30.0)
    assert np.all(np.diff(traj.times) > 0)
    # the final frame is the pure superposition by construction
    target = multi_soliton_state(grid, cfg, 30.0)
    assert _state_gap(traj.final, target) < 1e-12


def test_backward_construct_error_decays(backward_run):
    grid, cfg, traj = backward_run
    gaps = {}
    for st in traj:
        if abs(st.t - 6.0) < 1e-9 or abs(st.t - 12.0) < 1e-9:
            gaps[round(st.t)] = _state_gap(st, multi_soliton_state(grid, cfg, st.t))
    assert gaps[12] < 1e-2 * gaps[6]

import csv
import io
import logging

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, strategies as st
from scipy.linalg import expm

from threelevel import (RateSet, ThreeLevelAtom, fluxes, generator, gibbs, integrate,
                        rates, rhs, stationarity_reached)
from threelevel import kinetics
from threelevel.errors import InvalidStateError, UnstableStepError
from threelevel.kinetics import CSV_HEADER, max_exit_rate
from threelevel.stationary import stationary_closed_form

from conftest import random_atom, rate_sets, shared_per_frequency

ZERO = RateSet(0, 0, 0, 0, 0, 0)


def simplex_points():
    return st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).filter(
        lambda v: sum(v) > 1e-3).map(lambda v: np.array(v) / sum(v))


def test_rhs_decoupled_is_zero():
    assert rhs([0.2, 0.3, 0.5], ZERO).tolist() == [0.0, 0.0, 0.0]


def test_rhs_single_absorption_channel():
    r = RateSet(0, 1, 0, 0, 0, 0)
    assert rhs([1.0, 0.0, 0.0], r).tolist() == [-2.0, 2.0, 0.0]


@given(rate_sets(), simplex_points())
def test_rhs_sums_to_zero_and_matches_generator(r, p):
    d = rhs(p, r)
    assert abs(d.sum()) <= 1e-14 * max(1.0, np.abs(d).max())
    assert np.allclose(d, generator(r) @ p, rtol=1e-13, atol=1e-14)


@given(rate_sets(), simplex_points(), st.integers(0, 2))
def test_flow_keeps_empty_levels_nonnegative(r, p, j):
    p = p.copy()
    p[j] = 0.0
    assume(p.sum() > 1e-6)
    p /= p.sum()
    assert rhs(p, r)[j] >= 0.0


def test_fluxes_vacuum_spontaneous_emission(atom013):
    r = rates(atom013, gibbs(1e4))
    rec = fluxes([0.0, 1.0, 0.0], r, atom013)
    assert rec.f21 == 2.0 and rec.f31 == 0.0 and rec.f32 == 0.0


def test_fluxes_zero_coupling(atom013):
    rec = fluxes([0.2, 0.5, 0.3], ZERO, atom013)
    assert all(v == 0.0 for v in vars(rec).values())


def test_energy_identity_symbolic():
    # dE_atom/dt + sum_t w_t f_t vanishes once w31 = w21 + w32
    e1, e2, e3 = sp.symbols("e1 e2 e3", real=True)
    P = sp.symbols("P1:4")
    m21, p21, m31, p31, m32, p32 = sp.symbols("m21 p21 m31 p31 m32 p32")
    d1 = -2 * (p21 * P[0] + p31 * P[0]) + 2 * (m21 * P[1] + m31 * P[2])
    d2 = -2 * (m21 * P[1] + p32 * P[1]) + 2 * (m32 * P[2] + p21 * P[0])
    d3 = -2 * (m32 * P[2] + m31 * P[2]) + 2 * (p31 * P[0] + p32 * P[1])
    f21 = 2 * (m21 * P[1] - p21 * P[0])
    f31 = 2 * (m31 * P[2] - p31 * P[0])
    f32 = 2 * (m32 * P[2] - p32 * P[1])
    total = e1 * d1 + e2 * d2 + e3 * d3 + (e2 - e1) * f21 + (e3 - e1) * f31 + (e3 - e2) * f32
    assert sp.expand(total) == 0
    # the photon equations are the per-channel pieces of the level equations
    assert sp.expand(d1 - (f21 + f31)) == 0
    assert sp.expand(d3 + (f31 + f32)) == 0


@given(rate_sets(), simplex_points())
def test_flux_record_energy_balance(r, p):
    atom = ThreeLevelAtom((0.0, 1.0, 3.0), {"21": 1.0, "31": 1.0, "32": 1.0})
    rec = fluxes(p, r, atom)
    assert rec.dn_lr == rec.f21
    assert rec.dn_ud == rec.f31 + rec.f32
    assert abs(rec.atom_energy_rate + rec.field_energy_rate) <= 1e-10


def test_t_end_zero_single_sample(atom013):
    traj = integrate(atom013, gibbs(1.0), [0.3, 0.3, 0.4], 0.0)
    assert len(traj) == 1
    assert traj.P[0].tolist() == [0.3, 0.3, 0.4]
    assert traj.dn_lr[0] == 0.0 and traj.dn_ud[0] == 0.0


def test_invalid_initial_state(atom013):
    with pytest.raises(InvalidStateError):
        integrate(atom013, gibbs(1.0), [0.5, 0.5, 0.5], 1.0)
    with pytest.raises(InvalidStateError):
        integrate(atom013, gibbs(1.0), [1.2, -0.2, 0.0], 1.0)


def test_unstable_step_guard(atom013):
    r = rates(atom013, gibbs(1.0))
    limit = 0.5 / max_exit_rate(r)
    with pytest.raises(UnstableStepError):
        integrate(atom013, r, [1, 0, 0], 1.0, dt=limit)
    integrate(atom013, r, [1, 0, 0], 1.0, dt=0.99 * limit)


def test_default_step(atom013):
    r = rates(atom013, gibbs(1.0))
    traj = integrate(atom013, r, [1, 0, 0], 1.0)
    assert traj.dt <= 0.01 / max_exit_rate(r)
    assert np.all(np.diff(traj.t) > 0)
    assert traj.t[-1] == 1.0


def test_rk4_is_fourth_order_against_matrix_exponential(rng):
    atom = random_atom(rng)
    sp_ = shared_per_frequency(atom, 0.7, 1.1, 1.9)
    r = rates(atom, sp_)
    p0 = np.array([1.0, 0.0, 0.0])
    h = 0.2 / max_exit_rate(r)
    t_end = 8 * h  # short horizon, before relaxation hides the error
    exact = expm(generator(r) * t_end) @ p0
    errs = [np.abs(integrate(atom, r, p0, t_end, dt=h / 2**k).final_state - exact).max()
            for k in range(3)]
    assert errs[0] / errs[1] > 14
    assert errs[1] / errs[2] > 14


def test_gibbs_relaxes_to_boltzmann(rng):
    atom = random_atom(rng)
    beta = 0.8
    traj = integrate(atom, gibbs(beta), [0.0, 0.0, 1.0], 60.0, dt=0.05 / 4)
    w = np.exp(-beta * np.array(atom.energies))
    assert np.allclose(traj.final_state, w / w.sum(), atol=1e-10)
    rec = traj.flux_record()
    assert max(abs(rec.f21), abs(rec.f31), abs(rec.f32)) < 1e-10


def test_non_equilibrium_lr_photons_grow_linearly(atom013):
    sp_ = shared_per_frequency(atom013, 1.0, 2.5, 2.0)
    traj = integrate(atom013, sp_, [1, 0, 0], 60.0)
    slope = stationary_closed_form(traj.rates).emission_rate
    assert slope > 0
    late = traj.t > 40
    fit = np.polyfit(traj.t[late], traj.dn_lr[late], 1)
    assert fit[0] == pytest.approx(slope, rel=1e-8)
    # ud photon number freezes while lr keeps growing
    assert np.ptp(traj.dn_ud[late]) < 1e-8


def test_stationarity_at_exact_point(atom013):
    # uniform populations are exactly stationary in floating point here
    r = RateSet(1, 1, 1, 1, 1, 1)
    traj = integrate(atom013, r, [1 / 3, 1 / 3, 1 / 3], 0.0)
    assert stationarity_reached(traj, 5e-324)[0]


def test_stationarity_zero_length_tol_zero(atom013):
    traj = integrate(atom013, gibbs(1.0), [1, 0, 0], 0.0)
    reached, p = stationarity_reached(traj, 0.0)
    assert not reached
    assert p.tolist() == [1.0, 0.0, 0.0]


def test_stationarity_after_long_gibbs_run(atom013):
    r = rates(atom013, gibbs(1.0))
    lam = np.sort(np.abs(np.linalg.eigvals(generator(r))))
    t_relax = 1.0 / lam[1]
    traj = integrate(atom013, r, [0, 0, 1], 40 * t_relax)
    assert stationarity_reached(traj, 1e-8)[0]


def test_photon_counters_match_flux_integral(atom013):
    traj = integrate(atom013, shared_per_frequency(atom013, 1.0, 2.5, 2.0), [1, 0, 0], 5.0)
    assert traj.dn_lr[0] == 0.0 and traj.dn_ud[0] == 0.0
    assert traj.photon_integral_error() < 1e-9


def test_simplex_drift_tiny(rng):
    atom = random_atom(rng)
    traj = integrate(atom, gibbs(0.5), [1, 0, 0], 20.0)
    assert traj.max_simplex_drift < 1e-12
    assert traj.max_renormalization == 0.0
    assert np.all(traj.P >= -1e-15)


def test_renormalization_is_logged(atom013, monkeypatch, caplog):
    monkeypatch.setattr(kinetics, "SIMPLEX_TOL", -1.0)
    with caplog.at_level(logging.WARNING, logger="threelevel.kinetics"):
        traj = integrate(atom013, gibbs(1.0), [1, 0, 0], 0.1, dt=0.01)
    assert "renormalized" in caplog.text
    assert np.allclose(traj.P.sum(axis=1), 1.0, atol=1e-15)


def test_csv_export(atom013):
    traj = integrate(atom013, gibbs(1.0), [1, 0, 0], 0.05, dt=0.01, sample_every=2)
    text = traj.to_csv()
    assert "\r" not in text
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_HEADER
    assert [float(x) for x in rows[-1][:1]] == [0.05]
    assert len(rows) == 1 + 4  # t = 0, 0.02, 0.04, 0.05
    body = np.array(rows[1:], dtype=float)
    # 17 significant digits round-trip exactly
    assert np.array_equal(body[:, 1:4], traj.P)
    assert np.array_equal(body[:, 10], traj.E_field_delta)


def test_thinning_keeps_step_size(atom013):
    full = integrate(atom013, gibbs(1.0), [1, 0, 0], 1.0, dt=0.01)
    thin = integrate(atom013, gibbs(1.0), [1, 0, 0], 1.0, dt=0.01, sample_every=7)
    assert np.array_equal(thin.final_state, full.final_state)
    assert thin.t[-1] == 1.0

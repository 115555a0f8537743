# -*- coding: utf-8 -*-

import numpy as np
import pytest
from epifc.Errors import RangeError, LengthError
from epifc.SeirHcd import PARAM_GRID, SeirHcdParams, CompartmentState, initial_state, derivative, substeps, simulate, observe
from epifc.SeirHcd import FitContext, fit_loss, start_grid, fit, forecast, integrate, BOUNDS
import epifc.SeirHcd as SeirHcd

BASE = SeirHcdParams(3.6, 6.2, 7.0, 12.0, 14.0, 0.9, 0.1, 0.3)
FAST = SeirHcdParams(7.0, 2.9, 4.0, 4.0, 5.0, 0.7, 0.6, 0.8)

def random_state(rng):
  x = rng.dirichlet(np.ones(7))
  return CompartmentState.from_array(x)

######################################################################
### dynamics #########################################################
######################################################################

def test_disease_free_state_is_fixed():
  d = derivative(CompartmentState(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), BASE)
  assert d.array().tolist() == [0.0] * 7

def test_derivative_conserves_population():
  rng = np.random.RandomState(0)
  grid = start_grid()
  for _ in range(100):
    p = grid[rng.randint(len(grid))]
    assert derivative(random_state(rng), p).total() == pytest.approx(0.0, abs=1e-12)

def test_derivative_hand_value():
  d = derivative(CompartmentState(0.99, 0.0, 0.01, 0.0, 0.0, 0.0, 0.0), BASE)
  assert d.S == pytest.approx(-5.748e-3, abs=1e-6)
  assert d.E == pytest.approx(5.748e-3, abs=1e-6)
  assert d.I == pytest.approx(-0.01 / 6.2, rel=1e-12)
  assert d.R == pytest.approx(0.9 * 0.01 / 6.2, rel=1e-12)

def test_simulate_conserves_and_stays_non_negative():
  for p in (BASE, FAST):
    traj = simulate(p, initial_state(1000000, 10), 200)
    assert len(traj) == 201
    for s in traj:
      assert s.total() == pytest.approx(1.0, abs=1e-9)
      assert min(s.array()) >= -1e-12
    ### deaths accumulate
    D = [s.D for s in traj]
    assert all(b >= a - 1e-15 for a, b in zip(D, D[1:]))

def test_random_draws_conserve_over_a_year():
  rng = np.random.RandomState(11)
  lo, hi = np.array(BOUNDS).T
  P = rng.uniform(lo[:, None], hi[:, None], size=(8, 100))
  y0 = np.stack([initial_state(1000000, int(n)).array() for n in rng.randint(1, 1000, size=100)], axis=1)
  traj = integrate(y0, P, 365)
  assert traj.shape == (366, 7, 100)
  assert np.abs(traj.sum(axis=1) - 1.0).max() < 1e-6
  assert traj.min() >= -1e-12

def test_step_refinement_converges():
  init = initial_state(100000, 10)
  ref = simulate(FAST, init, 30, step=0.01)[-1].array()
  err = [np.abs(simulate(FAST, init, 30, step=s)[-1].array() - ref).max() for s in (0.5, 0.25, 0.1)]
  assert err[0] > err[1] > err[2]

def test_bad_steps():
  assert substeps(0.1) == 10
  assert substeps(1.0) == 1
  with pytest.raises(RangeError):
    substeps(0.0)
  with pytest.raises(RangeError):
    substeps(0.3)
  with pytest.raises(RangeError):
    simulate(BASE, initial_state(100), 0)

def test_observe_initial_condition():
  conf, death = observe(simulate(BASE, initial_state(1000, 5), 3), 1000)
  assert conf[0] == pytest.approx(5.0)
  assert death[0] == 0.0
  assert np.all(np.diff(conf) >= 0.0)

def test_params_out_of_bounds():
  with pytest.raises(RangeError):
    SeirHcdParams(8.0, 6.2, 7.0, 12.0, 14.0, 0.9, 0.1, 0.3)
  assert SeirHcdParams.from_array(BASE.array()) == BASE

######################################################################
### calibration ######################################################
######################################################################

def test_param_grid_and_start_grid():
  assert int(np.prod([len(v) for v in PARAM_GRID.values()])) == 432
  assert len(start_grid()) == 432
  assert len(start_grid(32)) == 32
  assert start_grid(32)[0] == start_grid()[0]
  assert start_grid(32)[-1] == start_grid()[-1]
  assert start_grid(1) == [start_grid()[0]]

def test_fit_context_weights():
  ctx = FitContext(1000)
  assert len(ctx.weights) == 21
  assert sum(ctx.weights) == pytest.approx(1.0)
  assert ctx.weights[-1] > ctx.weights[0]
  with pytest.raises(LengthError):
    FitContext(1000, weights=(1.0, 1.0))
  with pytest.raises(RangeError):
    FitContext(1000, window=3, weights=(3.0, 2.0, 1.0))

def test_fit_loss_last_day_weight():
  obs_c, obs_d = np.arange(10.0, 31.0), np.arange(21.0)
  pred_c, pred_d = obs_c.copy(), obs_d.copy()
  pred_c[-1] = 99.0
  w = np.zeros(21)
  w[-1] = 1.0
  assert fit_loss(pred_c, pred_d, obs_c, obs_d, w) == pytest.approx(0.5 * (np.log(100.0) - np.log(31.0)) ** 2)
  pred_c[0] = 1000.0
  assert fit_loss(pred_c, pred_d, obs_c, obs_d, w) == pytest.approx(0.5 * (np.log(100.0) - np.log(31.0)) ** 2)
  assert fit_loss(obs_c, obs_d, obs_c, obs_d, np.ones(21) / 21) == 0.0

def test_fit_recovers_self_generated_series():
  N = 1000000
  ctx = FitContext(N, n_inf=1)
  conf, death = observe(simulate(BASE, initial_state(N, 1), 80), N)
  exact = fit(conf, death, ctx, init_grid=[BASE])
  assert exact.loss < 1e-10
  start = SeirHcdParams(3.0, 6.2, 7.0, 12.0, 14.0, 0.9, 0.1, 0.3)
  moved = fit(conf, death, ctx, init_grid=[start])
  sc, sd = observe(simulate(start, initial_state(N, 1), 80), N)
  start_loss = fit_loss(sc[-21:], sd[-21:], conf[-21:], death[-21:], ctx.weights)
  assert moved.loss < start_loss
  assert moved.starts == 1 and moved.N == N
  assert moved.final_state.total() == pytest.approx(1.0, abs=1e-9)

def test_fit_forecast_matches_generator():
  N = 1000000
  ctx = FitContext(N, n_inf=1)
  conf, death = observe(simulate(BASE, initial_state(N, 1), 87), N)
  f = fit(conf[:81], death[:81], ctx, init_grid=[BASE])
  assert f.loss < 1e-10
  fc, fd = forecast(f.params, f.final_state, N, 7)
  assert np.allclose(fc, np.diff(conf[80:]), rtol=0.01, atol=0.0)
  assert np.allclose(fd, np.diff(death[80:]), rtol=0.01, atol=1e-6)

def test_fit_prefers_converged_start(monkeypatch):
  A = SeirHcdParams(3.6, 6.2, 7.0, 12.0, 14.0, 0.9, 0.1, 0.3)
  B = SeirHcdParams(1.2, 6.2, 7.0, 12.0, 14.0, 0.9, 0.1, 0.3)
  outcome = {3.6: (1.0, True), 1.2: (0.5, False)}
  def fake_start(args):
    _, x0 = args
    loss, ok = outcome[round(float(x0[0]), 1)]
    return x0, loss, ok
  monkeypatch.setattr(SeirHcd, '_run_start', fake_start)
  conf, death = np.arange(1.0, 31.0), np.zeros(30)
  f = fit(conf, death, FitContext(1000), init_grid=[A, B])
  assert f.converged
  assert f.params == A and f.loss == 1.0
  outcome[3.6] = (1.0, False)
  f = fit(conf, death, FitContext(1000), init_grid=[A, B])
  assert not f.converged
  assert f.params == B and f.loss == 0.5

def test_fit_input_checks():
  ctx = FitContext(1000)
  with pytest.raises(LengthError):
    fit(np.ones(30), np.ones(29), ctx)
  with pytest.raises(LengthError):
    fit(np.ones(10), np.ones(10), ctx)

######################################################################
### forecast #########################################################
######################################################################

def test_forecast_disease_free_is_zero():
  conf, death = forecast(BASE, CompartmentState(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 1000000, 14)
  assert len(conf) == 14 and len(death) == 14
  assert np.all(conf == 0.0) and np.all(death == 0.0)

def test_forecast_increments_non_negative():
  final = simulate(BASE, initial_state(1000000, 1), 60)[-1]
  conf, death = forecast(BASE, final, 1000000, 28)
  assert len(conf) == 28
  assert np.all(conf >= 0.0) and np.all(death >= 0.0)
  assert conf.sum() > 0.0

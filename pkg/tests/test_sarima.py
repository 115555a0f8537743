# -*- coding: utf-8 -*-

import numpy as np
import pytest
import scipy.stats
from statsmodels.regression.linear_model import yule_walker
from epifc.Errors import LengthError, FitError, EmptyResultError
from epifc.Sarima import SarimaOrder, SarimaFit, parse_order, full_space, reduced_space, roots_ok, satisfies_root_conditions
from epifc.Sarima import build_model, fit, forecast, one_step_predictions, diagnostics, forecast_counts, grid_search
from conftest import ar1_sample

def random_walk(n, seed, level=500.0):
  return level + np.cumsum(np.random.RandomState(seed).normal(0.0, 1.0, size=n))

######################################################################
### orders ###########################################################
######################################################################

def test_search_space_sizes():
  assert len(full_space()) == 3750
  assert len(set(full_space())) == 3750
  assert len(reduced_space()) == 216
  assert set(reduced_space()) <= set(full_space())

def test_parse_order():
  o = parse_order('2,1,0,1,1,0')
  assert o == SarimaOrder(2, 1, 0, 1, 1, 0, 7)
  assert str(o) == '(2,1,0)(1,1,0)_7'
  assert o.differencing().consumed() == 8
  with pytest.raises(AssertionError):
    parse_order('1,1,0')
  with pytest.raises(AssertionError):
    parse_order('5,1,0,0,0,0')

def test_root_conditions():
  assert roots_ok([], -1)
  assert roots_ok([0.5], -1)
  assert not roots_ok([1.0], -1)
  assert not roots_ok([1.2], -1)
  assert roots_ok([0.5], 1)
  assert not roots_ok([-1.5], 1)
  assert roots_ok([0.5], -1, 7)
  assert roots_ok([0.5, 0.3], -1)
  assert not roots_ok([0.5, 0.6], -1)

######################################################################
### fitting ##########################################################
######################################################################

def test_ar1_recovery():
  x = ar1_sample(0.6, 2000, seed=0)
  f = fit(x, SarimaOrder(1, 0, 0, 0, 0, 0))
  assert f.converged
  assert len(f.phi) == 1 and len(f.theta) == 0
  assert abs(f.phi[0] - 0.6) < 0.06
  assert abs(f.phi[0] - yule_walker(x, order=1)[0][0]) < 0.02
  assert f.sigma2 == pytest.approx(1.0, abs=0.1)
  assert satisfies_root_conditions(f)

def sarma_sample(theta, Phi, n, seed, s=7):
  rng = np.random.RandomState(seed)
  e = rng.normal(0.0, 1.0, size=n + 300)
  x = np.zeros(n + 300)
  for t in range(1, n + 300):
    x[t] = (Phi * x[t - s] if t >= s else 0.0) + e[t] + theta * e[t - 1]
  return x[300:]

def test_sarma_recovery_against_likelihood_grid():
  x = sarma_sample(0.4, 0.5, 3000, seed=7)
  order = SarimaOrder(0, 0, 1, 1, 0, 0)
  f = fit(x, order)
  assert f.converged
  assert abs(f.theta[0] - 0.4) < 0.1
  assert abs(f.Phi[0] - 0.5) < 0.1
  model = build_model(order, x)
  lattice = np.round(np.arange(0.2, 0.7 + 1e-9, 0.02), 2)
  llf = {(a, b): model.loglike(np.array([a, b, f.sigma2])) for a in lattice for b in lattice}
  best = max(llf, key=llf.get)
  assert abs(best[0] - 0.4) < 0.1 and abs(best[1] - 0.5) < 0.1
  assert f.loglik >= llf[best] - 1e-6

def test_random_walk_closed_form():
  y = random_walk(300, seed=1)
  f = fit(y, SarimaOrder(0, 1, 0, 0, 0, 0))
  w = np.diff(y)
  assert f.sigma2 == pytest.approx(np.mean(w ** 2), rel=1e-12)
  assert f.loglik == pytest.approx(np.sum(scipy.stats.norm.logpdf(w, 0.0, np.sqrt(f.sigma2))), rel=1e-6)
  assert np.allclose(forecast(f, 10), y[-1], rtol=0.0, atol=1e-8)
  pred, innov = one_step_predictions(f)
  assert np.allclose(pred, 0.0)
  assert np.allclose(innov, w)

def test_ar1_forecast_recursion():
  f = SarimaFit(SarimaOrder(1, 0, 0, 0, 0, 0), (0.5,), (), (), (), 1.0, 0.0, history=(2.0, -1.0, 8.0))
  assert np.allclose(forecast(f, 4), [4.0, 2.0, 1.0, 0.5], rtol=0.0, atol=1e-10)

def test_seasonal_walk_repeats_last_week():
  y = np.random.RandomState(8).normal(10.0, 2.0, size=50)
  f = fit(y, SarimaOrder(0, 0, 0, 0, 1, 0))
  assert np.allclose(forecast(f, 14), np.concatenate([y[-7:], y[-7:]]), rtol=0.0, atol=1e-9)

def test_fit_needs_length():
  with pytest.raises(LengthError):
    fit(random_walk(10, seed=2), SarimaOrder(1, 1, 0, 0, 0, 0))

def test_non_converged_fit_cannot_forecast():
  f = SarimaFit(SarimaOrder(0, 1, 0, 0, 0, 0), (), (), (), (), 1.0, 0.0, converged=False, history=(1.0, 2.0, 3.0))
  with pytest.raises(FitError):
    forecast(f, 3)
  with pytest.raises(FitError):
    diagnostics(f)

def test_diagnostics_on_ar1():
  f = fit(ar1_sample(0.6, 2000, seed=3), SarimaOrder(1, 0, 0, 0, 0, 0))
  rep = diagnostics(f)
  assert len(rep.acf) == 28
  assert max(abs(r) for r in rep.acf) < 0.1
  assert len(rep.qq_pairs) == len(rep.residuals)
  sample = [q[1] for q in rep.qq_pairs]
  assert sample == sorted(sample)

######################################################################
### count-scale pipeline #############################################
######################################################################

def test_forecast_counts_random_walk_is_flat():
  y = random_walk(120, seed=4)
  yhat, f = forecast_counts(y, SarimaOrder(0, 1, 0, 0, 0, 0), 7)
  assert len(yhat) == 7
  assert np.allclose(yhat, y[-1], rtol=1e-8)
  assert f.transform is not None

def test_grid_search_ranks_and_collects_failures():
  y = random_walk(40, seed=5)
  small, large = SarimaOrder(0, 1, 0, 0, 0, 0), SarimaOrder(4, 2, 4, 4, 2, 4)
  res = grid_search(y, [large, small], 7)
  assert [o for o, _ in res.ranked] == [small]
  assert [o for o, _ in res.failed] == [large]
  assert res.ranked[0][1].n == 7

def test_ar_family_outranks_ma_family():
  ### differenced series is AR(1) with a late shock that decays through the validation tail
  rng = np.random.RandomState(9)
  n, phi = 200, 0.9
  e = rng.normal(0.0, 1.0, size=n)
  e[n - 7 - 5] += 30.0
  x = np.zeros(n)
  for t in range(1, n):
    x[t] = phi * x[t - 1] + e[t]
  y = 10000.0 + np.cumsum(x)
  ar, ma = SarimaOrder(1, 1, 0, 0, 0, 0), SarimaOrder(0, 1, 1, 0, 0, 0)
  space = [SarimaOrder(p, 1, q, 0, 0, 0) for p in (0, 1) for q in (0, 1)]
  res = grid_search(y, space, 7, criterion='mse')
  ranked = [o for o, _ in res.ranked]
  assert ar in ranked
  assert ma not in ranked or ranked.index(ar) < ranked.index(ma)
  assert ranked.index(ar) < ranked.index(SarimaOrder(0, 1, 0, 0, 0, 0))

def test_grid_search_empty_space():
  with pytest.raises(EmptyResultError):
    grid_search(random_walk(40, seed=6), [], 7)
  with pytest.raises(EmptyResultError):
    grid_search(random_walk(40, seed=6), [SarimaOrder(4, 2, 4, 4, 2, 4)], 7)

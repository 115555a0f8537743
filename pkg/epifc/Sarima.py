# -*- coding: utf-8 -*-

import logging
import warnings
import itertools
import concurrent.futures
from dataclasses import dataclass, field
from typing import NamedTuple
import numpy as np
import scipy.stats
from statsmodels.tsa.statespace.sarimax import SARIMAX
from statsmodels.tsa.stattools import acf
from statsmodels.regression.linear_model import yule_walker
from epifc.Errors import LengthError, FitError, EmptyResultError
from epifc.Preprocessing import DifferencingSpec, difference, undifference, boxcox_fit, boxcox_apply, boxcox_invert, as_array
from epifc.Metrics import evaluate, HIGHER_IS_BETTER

MAXITER = 500
GTOL = 1e-6
ACF_LAGS = 28

##############################################################################################################
### SarimaOrder ##############################################################################################
##############################################################################################################

@dataclass(frozen=True, order=True)
class SarimaOrder:
  p: int = 0
  d: int = 1
  q: int = 0
  P: int = 0
  D: int = 0
  Q: int = 0
  s: int = 7

  def __post_init__(self):
    for name in ('p', 'q', 'P', 'Q'):
      assert 0 <= getattr(self, name) <= 4, '{}={} outside [0, 4]'.format(name, getattr(self, name))
    assert self.d in (0, 1, 2), 'd={} outside {{0, 1, 2}}'.format(self.d)
    assert self.D in (0, 1, 2), 'D={} outside {{0, 1, 2}}'.format(self.D)
    assert self.s > 0, 's must be positive'

  def key(self):
    return (self.p, self.d, self.q, self.P, self.D, self.Q)

  def differencing(self):
    return DifferencingSpec(self.d, self.D, self.s)

  def min_length(self):
    return self.d + self.D * self.s + 2 * max(self.p + self.P * self.s, self.q + self.Q * self.s) + 10

  def __str__(self):
    return '({},{},{})({},{},{})_{}'.format(self.p, self.d, self.q, self.P, self.D, self.Q, self.s)

def parse_order(text, s=7):
  vals = [int(t) for t in text.split(',')]
  assert len(vals) == 6, 'order must be p,d,q,P,D,Q'
  return SarimaOrder(*vals, s=s)

def full_space(s=7):
  return [SarimaOrder(p, d, q, P, D, Q, s) for p, d, q, P, D, Q in itertools.product(range(5), (1, 2), range(5), range(5), (0, 1, 2), range(5))]

def reduced_space(s=7):
  return [SarimaOrder(p, d, q, P, D, Q, s) for p, d, q, P, D, Q in itertools.product(range(3), (1, 2), range(3), range(2), (0, 1, 2), range(2))]

##############################################################################################################
### SarimaFit ################################################################################################
##############################################################################################################

@dataclass(frozen=True)
class SarimaFit:
  order: SarimaOrder
  phi: tuple
  theta: tuple
  Phi: tuple
  Theta: tuple
  sigma2: float
  loglik: float
  transform: object = None ### BoxCoxTransform applied by the caller
  converged: bool = True
  history: tuple = field(default=(), repr=False) ### transformed training series

  def params(self):
    return _pack(self)

def _pack(fit):
  ### statsmodels SARIMAX parameter order: ar, ma, seasonal ar, seasonal ma, sigma2
  return np.array(list(fit.phi) + list(fit.theta) + list(fit.Phi) + list(fit.Theta) + [fit.sigma2], dtype=np.float64)

def build_model(order, w):
  seasonal = (order.P, 0, order.Q, order.s) if (order.P or order.Q) else (0, 0, 0, 0)
  return SARIMAX(w, order=(order.p, 0, order.q), seasonal_order=seasonal, trend='n', enforce_stationarity=True, enforce_invertibility=True)

def roots_ok(coefs, sign, seasonal_lag=1):
  ### 1 - sum(c_i B^i) for AR (sign=-1), 1 + sum(c_i B^i) for MA (sign=+1); roots strictly outside the unit circle
  if len(coefs) == 0:
    return True
  poly = np.zeros(len(coefs) * seasonal_lag + 1)
  poly[0] = 1.0
  for i, c in enumerate(coefs):
    poly[(i + 1) * seasonal_lag] = sign * c
  roots = np.roots(poly[::-1])
  return bool(np.all(np.abs(roots) > 1.0))

def satisfies_root_conditions(fit):
  s = fit.order.s
  return roots_ok(fit.phi, -1) and roots_ok(fit.Phi, -1, s) and roots_ok(fit.theta, 1) and roots_ok(fit.Theta, 1, s)

def _shrink_to_stationary(coefs, seasonal_lag=1):
  coefs = np.asarray(coefs, dtype=np.float64)
  while len(coefs) and not roots_ok(coefs, -1, seasonal_lag):
    coefs = 0.5 * coefs
  return coefs

def start_points(order, w, seed):
  k_ar, k_ma, k_sar, k_sma = order.p, order.q, order.P, order.Q
  var = float(np.mean(w ** 2)) or 1.0
  zeros = np.zeros(k_ar + k_ma + k_sar + k_sma)
  ### Yule-Walker on the regular lags, and on the series sampled every s steps for the seasonal ones
  ar = yule_walker(w, order=k_ar)[0] if k_ar else np.zeros(0)
  sar = yule_walker(w[::order.s], order=k_sar)[0] if k_sar and len(w[::order.s]) > 2 * k_sar + 2 else np.zeros(k_sar)
  yw = np.concatenate([_shrink_to_stationary(ar), np.zeros(k_ma), _shrink_to_stationary(sar), np.zeros(k_sma)])
  rng = np.random.RandomState(seed)
  rnd = rng.uniform(-0.1, 0.1, size=len(zeros))
  return [np.append(p, var) for p in (zeros, yw, rnd)]

def _unpack(order, params, loglik, transform, converged, y):
  i = 0
  phi = tuple(params[i:i + order.p]); i += order.p
  theta = tuple(params[i:i + order.q]); i += order.q
  Phi = tuple(params[i:i + order.P]); i += order.P
  Theta = tuple(params[i:i + order.Q]); i += order.Q
  return SarimaFit(order, tuple(float(v) for v in phi), tuple(float(v) for v in theta), tuple(float(v) for v in Phi), tuple(float(v) for v in Theta), float(params[i]), float(loglik), transform, bool(converged), tuple(float(v) for v in y))

def _is_maximum(model, params):
  try:
    with warnings.catch_warnings():
      warnings.simplefilter('ignore')
      hess = model.hessian(params)
  except Exception as e: ### numerical hessian failures only disable the check
    logging.debug('hessian check skipped: {}'.format(e))
    return True
  if not np.all(np.isfinite(hess)):
    return False
  eig = np.linalg.eigvalsh(0.5 * (hess + hess.T))
  return bool(eig.max() <= 1e-4 * max(1.0, np.abs(eig).max()))

def fit(series, order, transform=None, seed=0):
  y = as_array(series)
  if len(y) <= order.min_length():
    raise LengthError('SARIMA{} needs more than {} values, got {}'.format(order, order.min_length(), len(y)))
  w = difference(order.differencing(), y)
  model = build_model(order, w)

  if model.k_params == 1:
    ### no ARMA parameters: the MLE of sigma2 is the mean square of the differenced series
    sigma2 = float(np.mean(w ** 2))
    loglik = float(model.loglike(np.array([sigma2])))
    if not np.isfinite(loglik):
      raise FitError('non-finite likelihood for SARIMA{}'.format(order))
    return _unpack(order, np.array([sigma2]), loglik, transform, True, y)

  best = None
  for n, start in enumerate(start_points(order, w, seed)):
    with warnings.catch_warnings():
      warnings.simplefilter('ignore')
      start_llf = model.loglike(start)
      try:
        res = model.fit(start_params=start, method='lbfgs', maxiter=MAXITER, disp=False, cov_type='none', pgtol=GTOL)
      except (np.linalg.LinAlgError, ValueError) as e:
        logging.debug('SARIMA{} start {} failed: {}'.format(order, n, e))
        continue
    params, llf = np.asarray(res.params), float(res.llf)
    if not np.isfinite(llf) or (np.isfinite(start_llf) and llf < start_llf):
      if not np.isfinite(start_llf):
        continue
      params, llf, ok = start, float(start_llf), False ### never return worse than the initialization
    else:
      ok = bool(res.mle_retvals.get('converged', False))
    logging.debug('SARIMA{} start {} llf={:.4f} converged={}'.format(order, n, llf, ok))
    if best is None or llf > best[1]:
      best = (params, llf, ok)

  if best is None:
    raise FitError('non-finite likelihood at every start for SARIMA{}'.format(order))
  params, llf, ok = best
  converged = ok and _is_maximum(model, params)
  if not converged:
    logging.warning('SARIMA{} did not converge (llf={:.4f})'.format(order, llf))
  return _unpack(order, params, llf, transform, converged, y)

##############################################################################################################
### Forecast / diagnostics ###################################################################################
##############################################################################################################

def _filtered(fit):
  y = np.asarray(fit.history)
  w = difference(fit.order.differencing(), y)
  model = build_model(fit.order, w)
  with warnings.catch_warnings():
    warnings.simplefilter('ignore')
    res = model.filter(_pack(fit))
  return y, w, res

def forecast(fit, h):
  if not fit.converged:
    raise FitError('cannot forecast from a non-converged SARIMA{} fit'.format(fit.order))
  assert h >= 1, 'horizon must be >= 1'
  y, w, res = _filtered(fit)
  wf = np.asarray(res.forecast(h))
  spec = fit.order.differencing()
  full = undifference(spec, y[:spec.consumed()], np.concatenate([w, wf]))
  return full[-h:]

def one_step_predictions(fit):
  ### in-sample one-step predictions and innovations on the differenced scale
  _, w, res = _filtered(fit)
  pred = np.asarray(res.fittedvalues)
  return pred, w - pred

class ResidualReport(NamedTuple):
  residuals: list
  acf: list
  qq_pairs: list

def diagnostics(fit, series=None):
  if not fit.converged:
    raise FitError('cannot diagnose a non-converged SARIMA{} fit'.format(fit.order))
  if series is not None:
    fit = _unpack(fit.order, _pack(fit), fit.loglik, fit.transform, fit.converged, as_array(series))
  _, w, res = _filtered(fit)
  resid = np.asarray(res.standardized_forecasts_error[0], dtype=np.float64)
  resid = resid[np.isfinite(resid)]
  nlags = min(ACF_LAGS, len(resid) - 1)
  r = acf(resid, nlags=nlags, fft=True)[1:]
  n = len(resid)
  theoretical = scipy.stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
  qq = list(zip(theoretical.tolist(), np.sort(resid).tolist()))
  return ResidualReport(resid.tolist(), r.tolist(), qq)

##############################################################################################################
### Count-scale pipeline / grid search #######################################################################
##############################################################################################################

def forecast_counts(train, order, h, seed=0):
  ### Box-Cox fitted on the training values, SARIMA on the transformed scale, back-transformed and floored at 0
  y = as_array(train)
  transform = boxcox_fit(y)
  z = boxcox_apply(transform, y)
  f = fit(z, order, transform, seed)
  if not f.converged:
    raise FitError('SARIMA{} did not converge'.format(order))
  return np.maximum(boxcox_invert(transform, forecast(f, h)), 0.0), f

class GridSearchResult(NamedTuple):
  ranked: list  ### [(SarimaOrder, MetricReport)] best first
  failed: list  ### [(SarimaOrder, reason)]

def _evaluate_order(args):
  train, valid, order, h, seed = args
  try:
    yhat, _ = forecast_counts(train, order, h, seed)
  except (FitError, LengthError) as e:
    return order, None, str(e)
  report = evaluate(valid, yhat)
  if not report.valid:
    return order, None, 'invalid metrics'
  return order, report, None

def grid_search(series, space, h, criterion='accuracy', seed=0, jobs=1):
  space = sorted(set(space), key=lambda o: o.key())
  if len(space) == 0:
    raise EmptyResultError('empty SARIMA search space')
  y = as_array(series)
  assert len(y) > h, 'series shorter than the validation tail'
  train, valid = y[:-h], y[-h:]
  jobs_args = [(train, valid, order, h, seed) for order in space]
  logging.info('SARIMA grid search: {} orders, validation tail {} days, criterion {}'.format(len(space), h, criterion))
  if jobs > 1:
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      outcomes = list(pool.map(_evaluate_order, jobs_args)) ### map keeps submission order
  else:
    outcomes = [_evaluate_order(a) for a in jobs_args]

  ranked, failed = [], []
  for order, report, reason in outcomes:
    if report is None:
      failed.append((order, reason))
    else:
      ranked.append((order, report))
  if len(ranked) == 0:
    raise EmptyResultError('every SARIMA fit failed ({} orders)'.format(len(space)))
  sign = -1.0 if HIGHER_IS_BETTER[criterion] else 1.0
  ranked.sort(key=lambda r: (sign * r[1].score(criterion), r[0].key()))
  logging.info('SARIMA grid search done: {} ranked, {} failed, best {} {}={:.4f}'.format(len(ranked), len(failed), ranked[0][0], criterion, ranked[0][1].score(criterion)))
  return GridSearchResult(ranked, failed)

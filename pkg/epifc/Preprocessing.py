# -*- coding: utf-8 -*-

import logging
from dataclasses import dataclass
import numpy as np
import scipy.stats
import scipy.special
import scipy.optimize
from statsmodels.tsa.stattools import adfuller
from epifc.Errors import LengthError, SingularityError

LAMBDA_RANGE = (-2.0, 2.0)
LAMBDA_GRID = 401
ADF_CRITICAL_VALUES = (('1%', -3.447), ('5%', -2.869), ('10%', -2.571))

def as_array(series):
  if hasattr(series, 'array'):
    return series.array()
  return np.asarray(series, dtype=np.float64)

##############################################################################################################
### Box-Cox ##################################################################################################
##############################################################################################################

@dataclass(frozen=True)
class BoxCoxTransform:
  lmbda: float
  shift: float = 0.0

def boxcox_fit(series):
  y = as_array(series)
  assert len(y) > 0, 'boxcox_fit needs a non-empty series'
  shift = 1.0 if np.any(y <= 0) else 0.0
  x = y + shift
  if np.ptp(x) == 0:
    return BoxCoxTransform(1.0, shift) ### flat likelihood
  grid = np.linspace(LAMBDA_RANGE[0], LAMBDA_RANGE[1], LAMBDA_GRID)
  llf = np.array([scipy.stats.boxcox_llf(l, x) for l in grid])
  i = int(np.nanargmax(llf))
  lmbda = grid[i]
  if 0 < i < len(grid) - 1:
    res = scipy.optimize.minimize_scalar(lambda l: -scipy.stats.boxcox_llf(l, x), bracket=(grid[i-1], grid[i], grid[i+1]), method='golden')
    if np.isfinite(res.x) and LAMBDA_RANGE[0] <= res.x <= LAMBDA_RANGE[1] and -res.fun >= llf[i]:
      lmbda = float(res.x)
  logging.debug('Box-Cox fit lambda={:.4f} shift={}'.format(lmbda, shift))
  return BoxCoxTransform(float(lmbda), shift)

def boxcox_apply(t, series):
  x = as_array(series) + t.shift
  if np.any(x <= 0):
    raise ValueError('Box-Cox input must satisfy y + shift > 0')
  return scipy.special.boxcox(x, t.lmbda)

def boxcox_invert(t, series):
  z = as_array(series).copy()
  if t.lmbda != 0.0:
    base = 1.0 + t.lmbda * z
    bad = base <= 0
    if bad.any():
      logging.warning('Box-Cox inverse clamped {} values to the domain boundary'.format(int(bad.sum())))
      ### lambda > 0 maps the boundary to 0; lambda < 0 stays just inside the domain
      edge = -1.0 / t.lmbda
      z[bad] = edge if t.lmbda > 0 else edge * (1.0 - 1e-12)
  return scipy.special.inv_boxcox(z, t.lmbda) - t.shift

##############################################################################################################
### Differencing #############################################################################################
##############################################################################################################

@dataclass(frozen=True)
class DifferencingSpec:
  d: int = 1
  D: int = 0
  s: int = 7

  def lags(self):
    ### seasonal steps first, then regular ones; (1-B)^d and (1-B^s)^D commute
    return [self.s] * self.D + [1] * self.d

  def consumed(self):
    return self.d + self.D * self.s

def _diff(x, lag):
  return x[lag:] - x[:-lag]

def difference(spec, series):
  x = as_array(series)
  if spec.consumed() >= len(x):
    raise LengthError('differencing (d={}, D={}, s={}) needs more than {} values, got {}'.format(spec.d, spec.D, spec.s, spec.consumed(), len(x)))
  for lag in spec.lags():
    x = _diff(x, lag)
  return x

def undifference(spec, head_values, diffed):
  head = as_array(head_values)
  diffed = as_array(diffed)
  if len(head) != spec.consumed():
    raise LengthError('undifference needs {} head values, got {}'.format(spec.consumed(), len(head)))
  ### seeds[k] are the first lag_k values of the k-th intermediate series
  seeds = []
  stage = head
  for lag in spec.lags():
    seeds.append(stage[:lag])
    stage = _diff(stage, lag)
  x = diffed
  for lag, seed in zip(reversed(spec.lags()), reversed(seeds)):
    out = np.empty(len(x) + lag)
    out[:lag] = seed
    for i in range(len(x)):
      out[i + lag] = out[i] + x[i]
    x = out
  return x

def stationarity_differencing(target, s=7):
  ### twice for confirmed cases, once for deaths
  return DifferencingSpec(d=2 if target == 'confirmed' else 1, D=0, s=s)

##############################################################################################################
### ADF ######################################################################################################
##############################################################################################################

@dataclass(frozen=True)
class AdfResult:
  statistic: float
  lags_used: int
  reject_at: frozenset

  def rejects(self, level='5%'):
    return level in self.reject_at

def adf_test(series):
  x = as_array(series)
  n = len(x)
  if n < 20:
    raise LengthError('adf_test needs >= 20 values, got {}'.format(n))
  if np.ptp(x) == 0:
    raise SingularityError('adf_test on a constant series')
  maxlag = int(np.floor(12.0 * (n / 100.0) ** 0.25))
  maxlag = max(0, min(maxlag, n // 2 - 3))
  try:
    statistic, _, usedlag, _, _, _ = adfuller(x, maxlag=maxlag, regression='c', autolag='AIC')
  except (np.linalg.LinAlgError, ValueError) as e:
    raise SingularityError('degenerate ADF regression: {}'.format(e))
  if not np.isfinite(statistic):
    raise SingularityError('degenerate ADF regression (statistic={})'.format(statistic))
  reject_at = frozenset(level for level, cv in ADF_CRITICAL_VALUES if statistic < cv)
  logging.debug('ADF statistic={:.3f} lags={} reject_at={}'.format(statistic, usedlag, sorted(reject_at)))
  return AdfResult(float(statistic), int(usedlag), reject_at)

##############################################################################################################
### Anchor normalization #####################################################################################
##############################################################################################################

@dataclass(frozen=True)
class Anchors:
  first: float
  last: float
  degenerate: bool = False

def anchor_normalize(segment):
  x = as_array(segment)
  if len(x) < 2:
    raise LengthError('anchor_normalize needs >= 2 values, got {}'.format(len(x)))
  first, last = float(x[0]), float(x[-1])
  if last == first:
    return np.zeros_like(x), Anchors(first, last, True)
  return (x - first) / (last - first), Anchors(first, last, False)

def anchor_denormalize(z, anchors):
  return anchors.first + as_array(z) * (anchors.last - anchors.first)

# -*- coding: utf-8 -*-

import logging
from dataclasses import dataclass, asdict
import numpy as np
from epifc.Errors import LengthError

METRICS = ('accuracy', 'mae', 'mse', 'rmse', 'mape', 'wape', 'rmsle')
HIGHER_IS_BETTER = {'accuracy': True, 'mae': False, 'mse': False, 'rmse': False, 'mape': False, 'wape': False, 'rmsle': False}
REPORT_FIELDS = {'accuracy': 'accuracy', 'mae': 'mae', 'mse': 'mse', 'rmse': 'rmse', 'mape': 'mape_pct', 'wape': 'wape_pct', 'rmsle': 'rmsle'}

@dataclass(frozen=True)
class MetricReport:
  accuracy: float
  mape_pct: float
  wape_pct: float
  mae: float
  mse: float
  rmse: float
  rmsle: float
  mape_excluded_terms: int = 0
  valid: bool = True
  n: int = 0

  def score(self, metric):
    return getattr(self, REPORT_FIELDS[metric])

  def as_dict(self):
    return asdict(self)

  @classmethod
  def from_dict(cls, d):
    return cls(**{k: (float('nan') if v is None else v) for k, v in d.items()})

def evaluate(y, y_hat):
  y = np.asarray(y, dtype=np.float64)
  y_hat = np.asarray(y_hat, dtype=np.float64)
  if len(y) == 0:
    raise LengthError('evaluate needs at least one value')
  if y.shape != y_hat.shape:
    raise LengthError('length mismatch {} != {}'.format(len(y), len(y_hat)))
  err = y - y_hat
  n = len(y)
  with np.errstate(divide='ignore', invalid='ignore'):
    accuracy = 1.0 - np.sqrt(np.mean((err / (y + 1.0)) ** 2))
    nz = y != 0
    excluded = int(n - nz.sum())
    mape = 100.0 * np.mean(np.abs(err[nz] / y[nz])) if nz.any() else float('nan')
    wape = 100.0 * np.sum(np.abs(err)) / np.sum(np.abs(y))
    mae = np.mean(np.abs(err))
    mse = np.mean(err ** 2)
    rmse = np.sqrt(mse)
    rmsle = np.sqrt(np.mean((np.log(y_hat + 1.0) - np.log(y + 1.0)) ** 2))
  values = [float(v) for v in (accuracy, mape, wape, mae, mse, rmse, rmsle)]
  valid = all(np.isfinite(v) for v in values)
  if excluded:
    logging.debug('MAPE excluded {}/{} zero-actual terms'.format(excluded, n))
  return MetricReport(*values, mape_excluded_terms=excluded, valid=valid, n=n)

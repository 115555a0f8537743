# -*- coding: utf-8 -*-

import json
import logging
from dataclasses import dataclass
from typing import NamedTuple
import numpy as np
from epifc.Errors import FitError, LengthError, RangeError, DegenerateError, SingularityError, EmptyResultError
from epifc.TimeSeries import task_window
from tools.Tools import stable_seed
from epifc import Sarima, SeirHcd
from epifc.Model import ActsHyper, hyper_space
from epifc.Learning import train
from epifc.Inference import Inference

FAMILIES = ('sarima', 'seirhcd', 'acts')
FAMILY_NAMES = {'sarima': 'SARIMA', 'seirhcd': 'SEIR_HCD', 'acts': 'ACTS'}
BASELINE_FAMILY = 'seirhcd'
REDUCED_SEIR_STARTS = 32
REDUCED_ACTS_EPOCHS = 600

##############################################################################################################
### ModelConfig ##############################################################################################
##############################################################################################################

@dataclass(frozen=True)
class ModelConfig:
  family: str
  params: tuple = () ### sorted (name, value) pairs, values json-compatible

  def __post_init__(self):
    if self.family not in FAMILIES:
      raise RangeError('unknown family {} (expected one of {})'.format(self.family, ', '.join(FAMILIES)))
    if isinstance(self.params, dict):
      object.__setattr__(self, 'params', tuple(sorted((k, _freeze(v)) for k, v in self.params.items())))

  def get(self, name, default=None):
    return dict(self.params).get(name, default)

  def as_dict(self):
    return {'family': self.family, 'params': {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params}}

  @classmethod
  def from_dict(cls, d):
    return cls(d['family'], dict(d.get('params', {})))

  def key(self):
    return json.dumps(self.as_dict(), sort_keys=True)

  def __str__(self):
    return '{}{}'.format(FAMILY_NAMES[self.family], ''.join('[{}={}]'.format(k, v) for k, v in self.params))

def _freeze(v):
  return tuple(v) if isinstance(v, list) else v

def sarima_config(order):
  return ModelConfig('sarima', {'order': list(order.key())})

def seirhcd_config(start=None, max_starts=None):
  ### a single start of the parameter grid, or a multistart subset of max_starts points (None: the whole grid)
  if start is not None:
    return ModelConfig('seirhcd', {'start': [float(v) for v in start.array()]})
  return ModelConfig('seirhcd', {'max_starts': max_starts} if max_starts is not None else {})

def acts_config(hyper):
  return ModelConfig('acts', {'epochs': hyper.epochs, 'hidden': hyper.hidden, 'rate': hyper.rate})

def default_config(family, reduced=True):
  if family == 'sarima':
    return sarima_config(Sarima.SarimaOrder(1, 1, 1, 1, 0, 1))
  if family == 'seirhcd':
    return seirhcd_config(max_starts=REDUCED_SEIR_STARTS if reduced else None)
  return acts_config(ActsHyper())

def hyper_grid(family, horizon, reduced=True):
  if family == 'sarima':
    space = Sarima.reduced_space() if reduced else Sarima.full_space()
    return [sarima_config(o) for o in space]
  if family == 'seirhcd':
    return [seirhcd_config(p) for p in SeirHcd.start_grid(REDUCED_SEIR_STARTS if reduced else None)]
  return [acts_config(h) for h in hyper_space(horizon, max_epochs=REDUCED_ACTS_EPOCHS if reduced else None)]

def stub_config(family, level=0.0, scale=0.0):
  ### stub forecasts are level + scale * mean(train), whatever the family
  return ModelConfig(family, {'level': float(level), 'scale': float(scale)})

##############################################################################################################
### Forecasting ##############################################################################################
##############################################################################################################

class ForecastResult(NamedTuple):
  forecast: list
  info: dict

def forecast_sarima(workbench, task, config, seed):
  data = workbench.dataset(task)
  order = Sarima.SarimaOrder(*config.get('order'))
  yhat, fit = Sarima.forecast_counts(data.train, order, task.horizon, seed)
  return yhat, {'order': str(order), 'lambda': fit.transform.lmbda, 'loglik': fit.loglik}

def seirhcd_fit(workbench, task, config):
  ### one joint confirmed/death fit per (region, window, config), shared by the tasks that need it
  start, end = task_window(task)
  key = ('seirhcd', task.region, start, end, config.key())
  if key not in workbench.cache:
    conf, death = workbench.cumulative(task.region, start, end)
    ctx = SeirHcd.FitContext(workbench.population(task.region))
    if config.get('start') is not None:
      starts = [SeirHcd.SeirHcdParams(*config.get('start'))]
    else:
      starts = SeirHcd.start_grid(config.get('max_starts'))
    workbench.cache[key] = SeirHcd.fit(conf, death, ctx, starts)
  return workbench.cache[key]

def forecast_seirhcd(workbench, task, config, seed):
  fit = seirhcd_fit(workbench, task, config)
  conf, death = SeirHcd.forecast(fit.params, fit.final_state, fit.N, task.horizon)
  yhat = conf if task.target == 'confirmed' else death
  return yhat, {'loss': fit.loss, 'converged': fit.converged, 'params': fit.params.as_dict()}

def forecast_acts(workbench, task, config, seed):
  ### one model per (target, horizon, window, hyper), trained jointly on every region
  ### the training seed ignores the region so the five regional tasks share the model
  hyper = ActsHyper(config.get('epochs'), config.get('hidden'), config.get('rate'), horizon=task.horizon)
  key = ('acts', task.target, task.horizon, task.window_policy, config.key())
  if key not in workbench.cache:
    names, series = workbench.region_train_series(task)
    train_seed = stable_seed(workbench.seed, *key)
    model, batch, history = train(series, hyper, names, seed=train_seed, report_every=max(hyper.epochs // 4, 1))
    workbench.cache[key] = (model, batch, history)
  model, batch, history = workbench.cache[key]
  yhat = Inference(model).forecast(batch, task.region)
  return yhat, {'train_mae': history[-1], 'epoch0_mae': history[0]}

def forecast_stub(workbench, task, config, seed):
  data = workbench.dataset(task)
  value = config.get('level', 0.0) + config.get('scale', 0.0) * float(np.mean(data.train.array()))
  return np.full(task.horizon, value), {'stub': True}

FORECASTERS = {'sarima': forecast_sarima, 'seirhcd': forecast_seirhcd, 'acts': forecast_acts}

def forecast_task(workbench, task, config, seed=0):
  ### raises FitError for every model failure so callers record fit_failed
  fn = forecast_stub if workbench.stub else FORECASTERS[config.family]
  try:
    yhat, info = fn(workbench, task, config, seed)
  except (LengthError, DegenerateError, SingularityError, EmptyResultError, np.linalg.LinAlgError) as e:
    raise FitError('{} failed on {} {}: {}'.format(config, task.region, task.key(), e))
  yhat = np.asarray(yhat, dtype=np.float64)
  if yhat.shape != (task.horizon,) or not np.all(np.isfinite(yhat)):
    raise FitError('{} produced an invalid forecast on {} {}'.format(config, task.region, task.key()))
  logging.debug('{} {} {} {}: {}'.format(config, task.region, task.key(), task.window_policy, ' '.join('{:.1f}'.format(v) for v in yhat)))
  return ForecastResult(yhat.tolist(), info)

def stub_grids():
  ### deterministic stub sweeps for every family; forecasts differ by their scale of the training mean
  return {
    'sarima': [stub_config('sarima', 0.0, s) for s in (0.6, 1.4)],
    'seirhcd': [stub_config('seirhcd', 0.0, s) for s in (0.8, 1.0, 1.2)],
    'acts': [stub_config('acts', 5.0, 1.0)],
  }

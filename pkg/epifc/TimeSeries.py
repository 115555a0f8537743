# -*- coding: utf-8 -*-

import logging
import datetime
from dataclasses import dataclass
import numpy as np
import scipy.stats
from epifc.Errors import LengthError, RangeError

ONE_DAY = datetime.timedelta(days=1)

REGIONS = ('CA', 'NY', 'TX', 'MN', 'HI')
TARGETS = ('confirmed', 'death')
HORIZONS = (7, 28)
WINDOW_POLICIES = ('since_vaccine', 'fixed_200', 'full_history')
TASK_KEYS = {'7-C': ('confirmed', 7), '28-C': ('confirmed', 28), '7-D': ('death', 7), '28-D': ('death', 28)}

######################################################################
### Training date ranges #############################################
######################################################################

TRAIN_END = {7: datetime.date(2021, 5, 8), 28: datetime.date(2021, 4, 17)}
VACCINE_START = datetime.date(2020, 12, 15)
FIXED_LENGTH = 200
FULL_HISTORY_START = {
  ('CA', 'confirmed'): datetime.date(2020, 1, 26), ('CA', 'death'): datetime.date(2020, 3, 4),
  ('NY', 'confirmed'): datetime.date(2020, 3, 3),  ('NY', 'death'): datetime.date(2020, 3, 11),
  ('TX', 'confirmed'): datetime.date(2020, 3, 5),  ('TX', 'death'): datetime.date(2020, 3, 17),
  ('MN', 'confirmed'): datetime.date(2020, 3, 6),  ('MN', 'death'): datetime.date(2020, 3, 21),
  ('HI', 'confirmed'): datetime.date(2020, 3, 7),  ('HI', 'death'): datetime.date(2020, 3, 24),
}

@dataclass(frozen=True)
class ForecastTask:
  region: str
  target: str
  horizon: int
  window_policy: str = 'fixed_200'

  def __post_init__(self):
    assert self.region in REGIONS, 'bad region {}'.format(self.region)
    assert self.target in TARGETS, 'bad target {}'.format(self.target)
    assert self.horizon in HORIZONS, 'bad horizon {}'.format(self.horizon)
    assert self.window_policy in WINDOW_POLICIES, 'bad window policy {}'.format(self.window_policy)

  def key(self):
    return '{}-{}'.format(self.horizon, 'C' if self.target == 'confirmed' else 'D')

  def with_policy(self, window_policy):
    return ForecastTask(self.region, self.target, self.horizon, window_policy)

def task_from_key(key, region, window_policy='fixed_200'):
  if key not in TASK_KEYS:
    raise RangeError('unknown task {} (expected one of {})'.format(key, ', '.join(TASK_KEYS)))
  target, horizon = TASK_KEYS[key]
  return ForecastTask(region, target, horizon, window_policy)

def task_window(task):
  end = TRAIN_END[task.horizon]
  if task.window_policy == 'since_vaccine':
    start = VACCINE_START
  elif task.window_policy == 'fixed_200':
    start = end - (FIXED_LENGTH - 1) * ONE_DAY
  else:
    start = FULL_HISTORY_START[(task.region, task.target)]
  return start, end

######################################################################
### DatedSeries ######################################################
######################################################################

@dataclass(frozen=True)
class DatedSeries:
  start_date: datetime.date
  values: tuple
  label: str = ''
  clamped: int = 0 ### negative increments clamped while deriving this series

  def __post_init__(self):
    object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
    if len(self.values) == 0:
      raise LengthError('empty series {}'.format(self.label))

  def __len__(self):
    return len(self.values)

  def array(self):
    return np.asarray(self.values, dtype=np.float64)

  @property
  def end_date(self):
    return self.start_date + (len(self.values) - 1) * ONE_DAY

  def index_of(self, day):
    return (day - self.start_date).days

def cumulative_to_daily(series):
  if len(series) < 2:
    raise LengthError('cumulative_to_daily needs >= 2 values, got {}'.format(len(series)))
  diff = np.diff(series.array())
  clamped = int(np.sum(diff < 0))
  if clamped:
    logging.warning('{}: clamped {} negative daily increments to 0'.format(series.label, clamped))
  return DatedSeries(series.start_date + ONE_DAY, tuple(np.maximum(diff, 0.0)), series.label, clamped)

def running_sum(series, offset=0.0):
  ### inverse of cumulative_to_daily when nothing was clamped: the result starts one day earlier at offset
  values = np.concatenate([[offset], offset + np.cumsum(series.array())])
  return DatedSeries(series.start_date - ONE_DAY, tuple(values), series.label)

def slice_window(series, start, end):
  if start > end:
    raise RangeError('empty window {} > {}'.format(start, end))
  if start < series.start_date or end > series.end_date:
    raise RangeError('window [{}, {}] outside {} coverage [{}, {}]'.format(start, end, series.label, series.start_date, series.end_date))
  i, j = series.index_of(start), series.index_of(end)
  return DatedSeries(start, series.values[i:j + 1], series.label)

######################################################################
### Summary statistics ###############################################
######################################################################

@dataclass(frozen=True)
class SummaryStats:
  min: float
  max: float
  mean: float
  variance: float
  p25: float
  median: float
  p75: float
  skewness: float
  kurtosis: float
  convention: str = 'sample'

  FIELDS = ('min', 'max', 'mean', 'variance', 'p25', 'median', 'p75', 'skewness', 'kurtosis')

  def as_dict(self):
    return {f: getattr(self, f) for f in self.FIELDS}

def summary_stats(series, convention='sample'):
  ### population: variance /n, g1 skewness, excess g2 kurtosis
  ### sample: variance /(n-1), bias-corrected G1 and excess G2
  assert convention in ('population', 'sample'), 'bad convention {}'.format(convention)
  x = series.array()
  if len(x) < 2:
    raise LengthError('summary_stats needs >= 2 values, got {}'.format(len(x)))
  bias = convention == 'population'
  p25, median, p75 = np.percentile(x, [25, 50, 75])
  if np.ptp(x) == 0:
    skew, kurt = 0.0, 0.0 ### moments undefined for a constant series
  else:
    skew = float(scipy.stats.skew(x, bias=bias))
    kurt = float(scipy.stats.kurtosis(x, fisher=True, bias=bias))
  return SummaryStats(float(x.min()), float(x.max()), float(x.mean()), float(np.var(x, ddof=0 if bias else 1)), float(p25), float(median), float(p75), skew, kurt, convention)

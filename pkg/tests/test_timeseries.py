# -*- coding: utf-8 -*-

import datetime
import itertools
import numpy as np
import pytest
from epifc.Errors import LengthError, RangeError
from epifc.TimeSeries import REGIONS, TARGETS, HORIZONS, WINDOW_POLICIES, ForecastTask, task_from_key, task_window
from epifc.TimeSeries import DatedSeries, cumulative_to_daily, running_sum, slice_window, summary_stats
from conftest import training_ranges

D0 = datetime.date(2021, 1, 1)

######################################################################
### DatedSeries / daily increments ###################################
######################################################################

def test_cumulative_to_daily_direct_difference(toy_series):
  daily = cumulative_to_daily(toy_series)
  assert daily.values == (5.0, 0.0, 15.0)
  assert daily.start_date == D0 + datetime.timedelta(days=1)
  assert daily.clamped == 0

def test_cumulative_to_daily_clamps_corrections():
  daily = cumulative_to_daily(DatedSeries(D0, (10, 8, 12)))
  assert daily.values == (0.0, 4.0)
  assert daily.clamped == 1

def test_cumulative_to_daily_needs_two_values():
  with pytest.raises(LengthError):
    cumulative_to_daily(DatedSeries(D0, (3,)))

def test_running_sum_inverts_daily_increments():
  cum = DatedSeries(D0, (4, 9, 9, 20, 31))
  back = running_sum(cumulative_to_daily(cum), offset=cum.values[0])
  assert back.values == cum.values
  assert back.start_date == cum.start_date

def test_empty_series_rejected():
  with pytest.raises(LengthError):
    DatedSeries(D0, ())

######################################################################
### slice_window #####################################################
######################################################################

def test_slice_window_unit_and_idempotent():
  s = DatedSeries(D0, range(30))
  one = slice_window(s, D0 + datetime.timedelta(days=3), D0 + datetime.timedelta(days=3))
  assert one.values == (3.0,)
  a, b = D0 + datetime.timedelta(days=5), D0 + datetime.timedelta(days=20)
  w = slice_window(s, a, b)
  assert len(w) == 16
  assert slice_window(w, a, b) == w

def test_slice_window_concatenation():
  s = DatedSeries(D0, range(30))
  a, b, c = D0 + datetime.timedelta(days=2), D0 + datetime.timedelta(days=10), D0 + datetime.timedelta(days=25)
  left = slice_window(s, a, b)
  right = slice_window(s, b + datetime.timedelta(days=1), c)
  assert left.values + right.values == slice_window(s, a, c).values

def test_slice_window_out_of_range():
  s = DatedSeries(D0, range(10))
  with pytest.raises(RangeError):
    slice_window(s, D0 - datetime.timedelta(days=1), D0 + datetime.timedelta(days=3))
  with pytest.raises(RangeError):
    slice_window(s, D0 + datetime.timedelta(days=5), D0 + datetime.timedelta(days=2))

######################################################################
### Training windows #################################################
######################################################################

def test_task_window_dates():
  ranges = training_ranges()
  assert len(ranges) == 60
  for (region, target, horizon, policy), expected in ranges.items():
    assert task_window(ForecastTask(region, target, horizon, policy)) == expected, (region, target, horizon, policy)

def test_fixed_200_windows_have_200_days():
  for region, target, horizon in itertools.product(REGIONS, TARGETS, HORIZONS):
    start, end = task_window(ForecastTask(region, target, horizon, 'fixed_200'))
    assert (end - start).days + 1 == 200

def test_task_keys():
  task = task_from_key('28-D', 'TX', 'since_vaccine')
  assert (task.target, task.horizon, task.window_policy) == ('death', 28, 'since_vaccine')
  assert task.key() == '28-D'
  assert task.with_policy('full_history').window_policy == 'full_history'
  with pytest.raises(RangeError):
    task_from_key('14-C', 'TX')

def test_every_policy_builds_a_window():
  for policy in WINDOW_POLICIES:
    start, end = task_window(ForecastTask('HI', 'confirmed', 7, policy))
    assert start < end

######################################################################
### summary_stats ####################################################
######################################################################

def test_summary_stats_constant_series():
  st = summary_stats(DatedSeries(D0, (5, 5, 5, 5)))
  assert (st.min, st.max, st.mean, st.variance) == (5.0, 5.0, 5.0, 0.0)

def test_summary_stats_moments_against_direct_formulas():
  x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
  st = summary_stats(DatedSeries(D0, x), 'population')
  assert (st.mean, st.median, st.p25, st.p75) == (3.0, 3.0, 2.0, 4.0)
  m = x.mean()
  m2, m3, m4 = np.mean((x - m) ** 2), np.mean((x - m) ** 3), np.mean((x - m) ** 4)
  assert st.variance == pytest.approx(m2, abs=1e-12)
  assert st.skewness == pytest.approx(m3 / m2 ** 1.5, abs=1e-12)
  assert st.kurtosis == pytest.approx(m4 / m2 ** 2 - 3.0, abs=1e-12)

def test_summary_stats_sample_convention():
  x = np.array([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
  st = summary_stats(DatedSeries(D0, x))
  assert st.convention == 'sample'
  n, m = len(x), x.mean()
  m2, m3, m4 = np.mean((x - m) ** 2), np.mean((x - m) ** 3), np.mean((x - m) ** 4)
  g1, g2 = m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0
  assert st.variance == pytest.approx(np.var(x, ddof=1), abs=1e-12)
  assert st.skewness == pytest.approx(np.sqrt(n * (n - 1)) / (n - 2) * g1, abs=1e-12)
  assert st.kurtosis == pytest.approx((n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * g2 + 6.0), abs=1e-12)

def test_summary_stats_permutation_invariant():
  rng = np.random.RandomState(3)
  x = rng.gamma(2.0, 10.0, size=50)
  a = summary_stats(DatedSeries(D0, x))
  b = summary_stats(DatedSeries(D0, rng.permutation(x)))
  for f in ('min', 'max', 'mean', 'variance', 'p25', 'median', 'p75'):
    assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-12)

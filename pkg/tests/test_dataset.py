# -*- coding: utf-8 -*-

import datetime
import itertools
import numpy as np
import pytest
from epifc.Errors import ParseError, UnknownStateError, CoverageError
from epifc.TimeSeries import REGIONS, TARGETS, ForecastTask, summary_stats
from epifc.Dataset import parse_snapshot, state_series, state_population, state_daily, window_cumulative, build_task_dataset
from conftest import synthetic_daily, training_ranges, POPULATIONS

TOY = '''UID,Admin2,Province_State,Country_Region,1/22/20,1/23/20,1/24/20,1/25/20
1,Alameda,California,US,1,2,3,3
2,Marin,California,US,0,1,1,2
3,Honolulu,Hawaii,US,0,0,4,4
'''

TOY_DEATHS = '''UID,Admin2,Province_State,Country_Region,Population,1/22/20,1/23/20,1/24/20,1/25/20
1,Alameda,California,US,1671329,0,0,1,1
2,Marin,California,US,258826,0,0,0,0
3,Honolulu,Hawaii,US,974563,0,0,0,1
'''

######################################################################
### parse_snapshot ###################################################
######################################################################

def test_parse_toy_snapshot():
  snap = parse_snapshot(TOY, 'confirmed')
  assert len(snap) == 3
  assert len(snap.dates) == 4
  assert snap.start_date == datetime.date(2020, 1, 22)
  assert snap.end_date == datetime.date(2020, 1, 25)
  assert snap.populations is None
  assert len(snap.sha256) == 64

def test_parse_population_column():
  snap = parse_snapshot(TOY_DEATHS, 'death')
  assert snap.populations == (1671329, 258826, 974563)
  assert state_population(snap, 'CA') == 1671329 + 258826

def test_state_series_sums_counties():
  snap = parse_snapshot(TOY, 'confirmed')
  ca = state_series(snap, 'CA')
  assert ca.values == (1.0 + 0.0, 2.0 + 1.0, 3.0 + 1.0, 3.0 + 2.0)
  assert ca.label == 'Conf-CA'
  assert state_series(snap, 'HI').values == (0.0, 0.0, 4.0, 4.0)

def test_unparseable_count_reports_position():
  bad = TOY.replace('0,1,1,2', '0,1,x,2')
  with pytest.raises(ParseError) as e:
    parse_snapshot(bad, 'confirmed')
  assert e.value.row == 3
  assert e.value.column == '1/24/20'

def test_non_monotone_date_header():
  bad = TOY.replace('1/23/20,1/24/20', '1/24/20,1/23/20')
  with pytest.raises(ParseError) as e:
    parse_snapshot(bad, 'confirmed')
  assert e.value.column == '1/23/20'

def test_negative_count_reports_position():
  bad = TOY.replace('0,0,4,4', '0,-1,4,4')
  with pytest.raises(ParseError) as e:
    parse_snapshot(bad, 'confirmed')
  assert e.value.row == 4
  assert e.value.column == '1/23/20'

def test_missing_state_column():
  with pytest.raises(ParseError):
    parse_snapshot(TOY.replace('Province_State', 'Region'), 'confirmed')

def test_unknown_state():
  snap = parse_snapshot(TOY, 'confirmed')
  with pytest.raises(UnknownStateError):
    state_series(snap, 'TX')

def test_population_needs_death_file():
  with pytest.raises(CoverageError):
    state_population(parse_snapshot(TOY, 'confirmed'), 'CA')

######################################################################
### synthetic snapshot pair ##########################################
######################################################################

def test_state_daily_matches_generator(snapshots):
  for state, target in itertools.product(REGIONS, TARGETS):
    daily = state_daily(snapshots[target], state)
    assert daily.start_date == datetime.date(2020, 1, 23)
    assert np.array_equal(daily.array(), synthetic_daily(state, target)[1:].astype(np.float64))

def test_state_series_is_county_sum(snapshots):
  for target in TARGETS:
    ca = state_series(snapshots[target], 'CA')
    assert np.array_equal(ca.array(), np.cumsum(synthetic_daily('CA', target)).astype(np.float64))

def test_state_series_ignores_other_regions(snapshots):
  assert state_population(snapshots['death'], 'HI') == POPULATIONS['HI']
  assert state_population(snapshots['death'], 'CA') == POPULATIONS['CA']

def test_summary_stats_on_snapshot(snapshots):
  daily = state_daily(snapshots['confirmed'], 'CA')
  st = summary_stats(daily)
  assert st.min == 0.0
  assert st.max == float(synthetic_daily('CA', 'confirmed').max())

def test_build_task_dataset_windows(snapshots):
  for (region, target, horizon, policy), (first, last) in training_ranges().items():
    task = ForecastTask(region, target, horizon, policy)
    data = build_task_dataset(snapshots[target], task, POPULATIONS[region])
    assert (data.train.start_date, data.train.end_date) == (first, last)
    assert len(data.train) == (last - first).days + 1
    assert len(data.test) == horizon
    assert data.test.start_date == last + datetime.timedelta(days=1)
    assert data.snapshot_sha256 == snapshots[target].sha256

def test_window_cumulative_and_coverage(snapshots):
  start, end = datetime.date(2021, 1, 1), datetime.date(2021, 1, 31)
  cum = window_cumulative(snapshots['death'], 'NY', start, end)
  assert len(cum) == 31
  assert np.all(np.diff(cum.array()) >= 0)
  with pytest.raises(CoverageError):
    window_cumulative(snapshots['death'], 'NY', start, datetime.date(2021, 6, 1))

def test_short_snapshot_coverage():
  snap = parse_snapshot(TOY_DEATHS, 'death')
  with pytest.raises(CoverageError):
    build_task_dataset(snap, ForecastTask('CA', 'death', 7, 'fixed_200'))

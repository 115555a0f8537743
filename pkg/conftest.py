# -*- coding: utf-8 -*-

import os
import sys
import datetime
import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from epifc.TimeSeries import DatedSeries, FULL_HISTORY_START
from epifc.Dataset import STATE_NAMES, SNAPSHOT_FILES, load_snapshots

FIRST_DAY = datetime.date(2020, 1, 22)
LAST_DAY = datetime.date(2021, 5, 15)
POPULATIONS = {'CA': 39512223, 'NY': 19453561, 'TX': 28995881, 'MN': 5639632, 'HI': 1415872}
SCALES = {('CA', 'confirmed'): 4000.0, ('NY', 'confirmed'): 2500.0, ('TX', 'confirmed'): 3000.0, ('MN', 'confirmed'): 600.0, ('HI', 'confirmed'): 60.0,
          ('CA', 'death'): 60.0, ('NY', 'death'): 45.0, ('TX', 'death'): 50.0, ('MN', 'death'): 8.0, ('HI', 'death'): 0.6}

######################################################################
### synthetic JHU snapshot pair ######################################
######################################################################

def snapshot_dates():
  n = (LAST_DAY - FIRST_DAY).days + 1
  return [FIRST_DAY + datetime.timedelta(days=i) for i in range(n)]

def synthetic_daily(state, target):
  ### weekly and slow waves plus noise, zero before the first reported case
  dates = snapshot_dates()
  rng = np.random.RandomState(sorted(STATE_NAMES).index(state) * 2 + (target == 'death'))
  t = np.arange(len(dates), dtype=np.float64)
  scale = SCALES[(state, target)]
  level = scale * (1.0 + 0.3 * np.sin(2.0 * np.pi * t / 7.0) + 0.6 * np.sin(2.0 * np.pi * t / 120.0) + t / 400.0)
  daily = np.maximum(np.round(level + rng.normal(0.0, 0.15 * scale + 0.5, size=len(t))), 0.0)
  first = (FULL_HISTORY_START[(state, target)] - FIRST_DAY).days
  daily[:first] = 0.0
  daily[first] = max(daily[first], 1.0)
  return daily.astype(np.int64)

def snapshot_frame(target):
  dates = snapshot_dates()
  rows = []
  for n, (state, name) in enumerate(STATE_NAMES.items()):
    cum = np.cumsum(synthetic_daily(state, target))
    parts = [cum // 3, cum - cum // 3] if state == 'CA' else [cum] ### two counties for CA
    pops = [POPULATIONS[state] // 3, POPULATIONS[state] - POPULATIONS[state] // 3] if state == 'CA' else [POPULATIONS[state]]
    for k, (part, pop) in enumerate(zip(parts, pops)):
      row = {'UID': 84000000 + 100 * n + k, 'iso2': 'US', 'iso3': 'USA', 'code3': 840, 'FIPS': 1000.0 * (n + 1) + k, 'Admin2': 'County{}'.format(k), 'Province_State': name, 'Country_Region': 'US', 'Lat': 0.0, 'Long_': 0.0, 'Combined_Key': 'County{}, {}, US'.format(k, name)}
      if target == 'death':
        row['Population'] = pop
      row.update({'{}/{}/{}'.format(d.month, d.day, d.year % 100): int(v) for d, v in zip(dates, part)})
      rows.append(row)
  ### a region outside the five states
  other = {'UID': 316, 'iso2': 'GU', 'iso3': 'GUM', 'code3': 316, 'FIPS': 66.0, 'Admin2': '', 'Province_State': 'Guam', 'Country_Region': 'US', 'Lat': 13.4, 'Long_': 144.8, 'Combined_Key': 'Guam, US'}
  if target == 'death':
    other['Population'] = 164229
  other.update({'{}/{}/{}'.format(d.month, d.day, d.year % 100): 7 * i for i, d in enumerate(dates)})
  rows.append(other)
  return pd.DataFrame(rows)

def write_snapshots(data_dir):
  os.makedirs(data_dir, exist_ok=True)
  for target, fname in SNAPSHOT_FILES.items():
    snapshot_frame(target).to_csv(os.path.join(data_dir, fname), index=False)
  return data_dir

@pytest.fixture(scope='session')
def data_dir(tmp_path_factory):
  return write_snapshots(str(tmp_path_factory.mktemp('data')))

@pytest.fixture(scope='session')
def snapshots(data_dir):
  return load_snapshots(data_dir)

######################################################################
### printed training date ranges #####################################
######################################################################

def _d(text):
  return datetime.datetime.strptime(text, '%Y-%m-%d').date()

FIRST_CASE_DAYS = {
  ('CA', 'confirmed'): '2020-01-26', ('CA', 'death'): '2020-03-04',
  ('NY', 'confirmed'): '2020-03-03', ('NY', 'death'): '2020-03-11',
  ('TX', 'confirmed'): '2020-03-05', ('TX', 'death'): '2020-03-17',
  ('MN', 'confirmed'): '2020-03-06', ('MN', 'death'): '2020-03-21',
  ('HI', 'confirmed'): '2020-03-07', ('HI', 'death'): '2020-03-24',
}

def training_ranges():
  ### (region, target, horizon, policy) -> (first day, last day) as printed for every task
  ranges = {}
  for (region, target), first in FIRST_CASE_DAYS.items():
    for horizon, last, fixed_first in ((7, '2021-05-08', '2020-10-21'), (28, '2021-04-17', '2020-09-30')):
      ranges[(region, target, horizon, 'since_vaccine')] = (_d('2020-12-15'), _d(last))
      ranges[(region, target, horizon, 'fixed_200')] = (_d(fixed_first), _d(last))
      ranges[(region, target, horizon, 'full_history')] = (_d(first), _d(last))
  return ranges

######################################################################
### small series #####################################################
######################################################################

@pytest.fixture
def toy_series():
  return DatedSeries(datetime.date(2021, 1, 1), (10, 15, 15, 30), 'Conf-XX')

def ar1_sample(phi, n, seed, sigma=1.0):
  rng = np.random.RandomState(seed)
  e = rng.normal(0.0, sigma, size=n + 200)
  x = np.zeros(n + 200)
  for t in range(1, n + 200):
    x[t] = phi * x[t - 1] + e[t]
  return x[200:]

def region_waves(n_regions=3, T=120, seed=0):
  ### sinusoid plus trend regions with distinct phases
  rng = np.random.RandomState(seed)
  t = np.arange(T, dtype=np.float64)
  out = []
  for i in range(n_regions):
    out.append(50.0 + 0.5 * (i + 1) * t + 10.0 * np.sin(2.0 * np.pi * t / 14.0 + i) + rng.normal(0.0, 0.5, size=T))
  return out

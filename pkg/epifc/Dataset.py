# -*- coding: utf-8 -*-

import io
import os
import re
import logging
import datetime
from dataclasses import dataclass
import numpy as np
import pandas as pd
from epifc.Errors import ParseError, CoverageError, UnknownStateError
from epifc.TimeSeries import DatedSeries, ONE_DAY, cumulative_to_daily, slice_window, task_window
from tools.Tools import content_hash

STATE_NAMES = {'CA': 'California', 'NY': 'New York', 'TX': 'Texas', 'MN': 'Minnesota', 'HI': 'Hawaii'}
STATE_CODES = {v: k for k, v in STATE_NAMES.items()}
SNAPSHOT_FILES = {'confirmed': 'time_series_covid19_confirmed_US.csv', 'death': 'time_series_covid19_deaths_US.csv'}
TARGET_LABELS = {'confirmed': 'Conf', 'death': 'Death'}
DATE_COLUMN = re.compile(r'^\d{1,2}/\d{1,2}/\d{2}$')

#######################################################
### RawSnapshot #######################################
#######################################################

@dataclass(frozen=True, eq=False)
class RawSnapshot:
  target: str
  dates: tuple        ### one calendar date per date column
  states: tuple       ### Province_State of each row
  counts: np.ndarray  ### [rows, dates] cumulative counts
  populations: tuple = None ### per row (death file only)
  sha256: str = ''

  def __len__(self):
    return len(self.states)

  @property
  def start_date(self):
    return self.dates[0]

  @property
  def end_date(self):
    return self.dates[-1]

def parse_date(column):
  month, day, year = (int(t) for t in column.split('/'))
  return datetime.date(2000 + year, month, day)

def parse_snapshot(csv_text, target):
  assert target in SNAPSHOT_FILES, 'bad target {}'.format(target)
  try:
    df = pd.read_csv(io.StringIO(csv_text), dtype=str, keep_default_na=False)
  except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
    raise ParseError('unreadable csv: {}'.format(e))
  if 'Province_State' not in df.columns:
    raise ParseError('missing mandatory column Province_State')
  date_cols = [c for c in df.columns if DATE_COLUMN.match(c.strip())]
  if len(date_cols) == 0:
    raise ParseError('no date column in M/D/YY form')
  dates = [parse_date(c.strip()) for c in date_cols]
  for n in range(1, len(dates)):
    if dates[n] <= dates[n-1]:
      raise ParseError('non-monotone date header', row=1, column=date_cols[n])
    if dates[n] != dates[n-1] + ONE_DAY:
      logging.warning('date header gap between {} and {}'.format(dates[n-1], dates[n]))

  counts = np.zeros((len(df), len(date_cols)), dtype=np.int64)
  for j, c in enumerate(date_cols):
    col = pd.to_numeric(df[c].str.strip(), errors='coerce')
    bad = col.isna() | (col != np.floor(col))
    if bad.any():
      i = int(np.flatnonzero(bad.to_numpy())[0])
      raise ParseError('unparseable count {!r}'.format(df[c].iloc[i]), row=i + 2, column=c) ### header is row 1
    if (col < 0).any():
      i = int(np.flatnonzero((col < 0).to_numpy())[0])
      raise ParseError('negative cumulative count {}'.format(df[c].iloc[i]), row=i + 2, column=c)
    counts[:, j] = col.to_numpy().astype(np.int64)

  populations = None
  if 'Population' in df.columns:
    col = pd.to_numeric(df['Population'].str.strip(), errors='coerce')
    if col.isna().any():
      i = int(np.flatnonzero(col.isna().to_numpy())[0])
      raise ParseError('unparseable population {!r}'.format(df['Population'].iloc[i]), row=i + 2, column='Population')
    populations = tuple(int(p) for p in col)

  states = tuple(s.strip() for s in df['Province_State'])
  logging.info('Parsed {} snapshot ({} rows ~ {} dates [{} - {}])'.format(target, len(states), len(dates), dates[0], dates[-1]))
  return RawSnapshot(target, tuple(dates), states, counts, populations, content_hash(csv_text))

def load_snapshot(path, target):
  if not os.path.isfile(path):
    raise CoverageError('cannot find snapshot file {}'.format(path))
  with open(path, 'r', encoding='utf-8') as fd:
    text = fd.read()
  logging.info('Read {} from {}'.format(target, path))
  return parse_snapshot(text, target)

def load_snapshots(data_dir):
  return {target: load_snapshot(os.path.join(data_dir, fname), target) for target, fname in SNAPSHOT_FILES.items()}

#######################################################
### State series ######################################
#######################################################

def state_rows(snapshot, state):
  name = STATE_NAMES.get(state, state)
  rows = [i for i, s in enumerate(snapshot.states) if s == name]
  if len(rows) == 0:
    raise UnknownStateError('unknown state {} in {} snapshot'.format(state, snapshot.target))
  return rows

def state_series(snapshot, state):
  rows = state_rows(snapshot, state)
  code = STATE_CODES.get(state, state)
  summed = snapshot.counts[rows].sum(axis=0)
  return DatedSeries(snapshot.start_date, tuple(summed), '{}-{}'.format(TARGET_LABELS[snapshot.target], code))

def state_population(snapshot, state):
  if snapshot.populations is None:
    raise CoverageError('{} snapshot has no Population column'.format(snapshot.target))
  population = sum(snapshot.populations[i] for i in state_rows(snapshot, state))
  if population <= 0:
    raise CoverageError('non-positive population for {}'.format(state))
  return int(population)

def state_daily(snapshot, state):
  return cumulative_to_daily(state_series(snapshot, state))

def window_cumulative(snapshot, state, start, end):
  cum = state_series(snapshot, state)
  if start < cum.start_date or end > cum.end_date:
    raise CoverageError('{} snapshot [{} - {}] does not cover [{} - {}]'.format(snapshot.target, cum.start_date, cum.end_date, start, end))
  return slice_window(cum, start, end)

#######################################################
### TaskDataset #######################################
#######################################################

@dataclass(frozen=True)
class TaskDataset:
  task: object
  train: DatedSeries  ### daily
  test: DatedSeries   ### daily, task.horizon days right after train
  population: int
  snapshot_sha256: str = ''

  def __post_init__(self):
    assert len(self.test) == self.task.horizon, 'test length {} != horizon {}'.format(len(self.test), self.task.horizon)
    assert self.train.end_date + ONE_DAY == self.test.start_date, 'train/test not contiguous'

def build_task_dataset(snapshot, task, population=None):
  assert snapshot.target == task.target, 'snapshot target {} != task target {}'.format(snapshot.target, task.target)
  if population is None:
    population = state_population(snapshot, task.region)
  start, end = task_window(task)
  test_end = end + task.horizon * ONE_DAY
  daily = state_daily(snapshot, task.region)
  if start < daily.start_date or test_end > daily.end_date:
    raise CoverageError('{} snapshot daily coverage [{} - {}] insufficient for task window [{} - {}]'.format(task.target, daily.start_date, daily.end_date, start, test_end))
  train = slice_window(daily, start, end)
  test = slice_window(daily, end + ONE_DAY, test_end)
  logging.debug('Built dataset {} {} {}: train [{} - {}] test [{} - {}]'.format(task.region, task.key(), task.window_policy, train.start_date, train.end_date, test.start_date, test.end_date))
  return TaskDataset(task, train, test, int(population), snapshot.sha256)

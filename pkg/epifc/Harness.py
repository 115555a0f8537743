# -*- coding: utf-8 -*-

import os
import json
import time
import logging
import concurrent.futures
from dataclasses import dataclass, replace, asdict
from typing import NamedTuple
import numpy as np
from epifc.Errors import SweepError, EmptyResultError, MissingBaselineError, FitError, CoverageError
from epifc.TimeSeries import ForecastTask, REGIONS, WINDOW_POLICIES, TASK_KEYS
from epifc.Dataset import load_snapshots, state_population, build_task_dataset, window_cumulative
from epifc.Metrics import METRICS, HIGHER_IS_BETTER, MetricReport, evaluate
from epifc.Forecasters import ModelConfig, FAMILIES, BASELINE_FAMILY, forecast_task, hyper_grid
from tools.Tools import stable_seed, write_json, write_csv

SCHEMA_VERSION = 1
DIMENSIONS = ('model_selection', 'hyperparameter_tuning', 'ts_length')
DIMENSION_TAGS = {'model_selection': 'MS', 'hyperparameter_tuning': 'HT', 'ts_length': 'LEN'}
STATUSES = ('ok', 'fit_failed', 'invalid_metrics')
BASELINE_WINDOW = 'fixed_200'

##############################################################################################################
### Workbench ################################################################################################
##############################################################################################################

class Workbench():
  ### snapshot pair plus the datasets and fits derived from it
  def __init__(self, snapshots, seed=12345, stub=False, populations=None):
    self.snapshots = snapshots
    self.seed = seed
    self.stub = stub
    self.populations = dict(populations or {})
    self.cache = {}

  @classmethod
  def from_dir(cls, data_dir, **kwargs):
    return cls(load_snapshots(data_dir), **kwargs)

  def sha256(self, target):
    return self.snapshots[target].sha256

  def population(self, region):
    if region not in self.populations:
      try:
        self.populations[region] = state_population(self.snapshots['death'], region)
      except CoverageError:
        self.populations[region] = state_population(self.snapshots['confirmed'], region)
    return self.populations[region]

  def dataset(self, task):
    key = ('dataset', task)
    if key not in self.cache:
      self.cache[key] = build_task_dataset(self.snapshots[task.target], task, self.population(task.region))
    return self.cache[key]

  def cumulative(self, region, start, end):
    return window_cumulative(self.snapshots['confirmed'], region, start, end), window_cumulative(self.snapshots['death'], region, start, end)

  def region_train_series(self, task):
    series = [self.dataset(ForecastTask(r, task.target, task.horizon, task.window_policy)).train for r in REGIONS]
    return REGIONS, series

##############################################################################################################
### RunRecord ################################################################################################
##############################################################################################################

class Settings(NamedTuple):
  config: ModelConfig
  window_policy: str

@dataclass(frozen=True)
class RunRecord:
  run_id: str
  task: ForecastTask
  dimension: str
  config: ModelConfig
  window_policy: str
  seed: int
  report: MetricReport = None
  status: str = 'ok'
  wall_time: float = None
  forecast: tuple = ()
  truth: tuple = ()
  snapshot_sha256: str = ''
  reason: str = ''

  def __post_init__(self):
    assert self.status in STATUSES, 'bad status {}'.format(self.status)
    assert self.dimension in DIMENSIONS, 'bad dimension {}'.format(self.dimension)
    if self.status == 'ok':
      assert self.report is not None and self.report.valid, 'ok record {} without a valid report'.format(self.run_id)

  def settings(self):
    return Settings(self.config, self.window_policy)

  def valid(self):
    return self.status == 'ok'

  def as_dict(self):
    d = {
      'schema': SCHEMA_VERSION,
      'run_id': self.run_id,
      'task': {'region': self.task.region, 'target': self.task.target, 'horizon': self.task.horizon},
      'dimension': self.dimension,
      'config': self.config.as_dict(),
      'window_policy': self.window_policy,
      'seed': self.seed,
      'status': self.status,
      'report': self.report.as_dict() if self.report is not None else None,
      'forecast': list(self.forecast),
      'truth': list(self.truth),
      'snapshot_sha256': self.snapshot_sha256,
      'reason': self.reason,
    }
    if self.wall_time is not None:
      d['wall_time'] = self.wall_time
    return d

  @classmethod
  def from_dict(cls, d):
    if d.get('schema') != SCHEMA_VERSION:
      raise SweepError('unsupported run record schema {}'.format(d.get('schema')))
    t = d['task']
    report = MetricReport.from_dict(d['report']) if d['report'] is not None else None
    return cls(d['run_id'], ForecastTask(t['region'], t['target'], t['horizon'], d['window_policy']), d['dimension'], ModelConfig.from_dict(d['config']), d['window_policy'], d['seed'], report, d['status'], d.get('wall_time'), tuple(d['forecast']), tuple(d['truth']), d['snapshot_sha256'], d['reason'])

def json_safe(obj):
  ### json without NaN/Infinity
  if isinstance(obj, float):
    return obj if np.isfinite(obj) else None
  if isinstance(obj, dict):
    return {k: json_safe(v) for k, v in obj.items()}
  if isinstance(obj, (list, tuple)):
    return [json_safe(v) for v in obj]
  return obj

class RunStore():
  ### append-only NDJSON log, one RunRecord per line; path None keeps records in memory only
  def __init__(self, path=None, mode='w'):
    self.path = path
    self.records = []
    self.fd = None
    if path is not None:
      dname = os.path.dirname(path)
      if dname:
        os.makedirs(dname, exist_ok=True)
      self.fd = open(path, mode, encoding='utf-8')

  def append(self, record):
    self.records.append(record)
    if self.fd is not None:
      self.fd.write(json.dumps(json_safe(record.as_dict()), sort_keys=True, allow_nan=False) + '\n')
      self.fd.flush()

  def close(self):
    if self.fd is not None:
      self.fd.close()
      self.fd = None
      logging.info('Wrote {} run records to {}'.format(len(self.records), self.path))

  def __enter__(self):
    return self

  def __exit__(self, *args):
    self.close()

  @staticmethod
  def load(path):
    records = []
    with open(path, 'r', encoding='utf-8') as fd:
      for n, line in enumerate(fd, 1):
        if line.strip():
          records.append(RunRecord.from_dict(json.loads(line)))
    logging.info('Read {} run records from {}'.format(len(records), path))
    return records

##############################################################################################################
### Execution ################################################################################################
##############################################################################################################

def record_seed(base_seed, task, settings):
  return stable_seed(base_seed, task.region, task.target, task.horizon, settings.config.key(), settings.window_policy)

def execute(workbench, task, settings, dimension, seed, run_id, timings=False):
  t = task.with_policy(settings.window_policy)
  data = workbench.dataset(t)
  truth = tuple(float(v) for v in data.test.values)
  tic = time.time()
  try:
    result = forecast_task(workbench, t, settings.config, seed)
  except FitError as e:
    logging.warning('{}: {}'.format(run_id, e))
    return RunRecord(run_id, t, dimension, settings.config, settings.window_policy, seed, None, 'fit_failed', time.time() - tic if timings else None, (), truth, data.snapshot_sha256, str(e))
  report = evaluate(truth, result.forecast)
  status = 'ok' if report.valid else 'invalid_metrics'
  return RunRecord(run_id, t, dimension, settings.config, settings.window_policy, seed, report, status, time.time() - tic if timings else None, tuple(result.forecast), truth, data.snapshot_sha256, '' if report.valid else 'non-finite metric')

_WORKBENCH = None

def _init_worker(workbench):
  global _WORKBENCH
  _WORKBENCH = workbench

def _execute_job(args):
  return execute(_WORKBENCH, *args)

def check_sweep(dimension, baseline, sweep):
  if len(sweep) == 0:
    raise SweepError('empty {} sweep'.format(dimension))
  for s in sweep:
    if dimension == 'ts_length' and s.config != baseline.config:
      raise SweepError('ts_length sweep must keep the baseline config, got {}'.format(s.config))
    if dimension != 'ts_length' and s.window_policy != baseline.window_policy:
      raise SweepError('{} sweep must keep the baseline window {}, got {}'.format(dimension, baseline.window_policy, s.window_policy))
    if dimension == 'hyperparameter_tuning' and s.config.family != baseline.config.family:
      raise SweepError('hyperparameter_tuning sweep must keep the family {}, got {}'.format(baseline.config.family, s.config.family))

def run_dimension(workbench, task, dimension, baseline, sweep, jobs=1, store=None, timings=False, reuse=None):
  ### one RunRecord per sweep point, in sweep order; reuse maps (config key, window) to an earlier record
  check_sweep(dimension, baseline, sweep)
  tag = DIMENSION_TAGS[dimension]
  jobs_args, records = [], [None] * len(sweep)
  for n, s in enumerate(sweep):
    run_id = '{}.{}.{}.{}.{:05d}'.format(task.region, task.key(), tag, s.config.family, n)
    seed = record_seed(workbench.seed, task, s)
    prior = reuse.get((s.config.key(), s.window_policy)) if reuse is not None else None
    if prior is not None:
      records[n] = replace(prior, run_id=run_id, dimension=dimension)
    else:
      jobs_args.append((n, (task, s, dimension, seed, run_id, timings)))
  logging.info('Running {} {} {}: {} settings ({} reused)'.format(task.region, task.key(), tag, len(sweep), len(sweep) - len(jobs_args)))

  if jobs > 1 and len(jobs_args) > 1:
    pool = concurrent.futures.ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(workbench,))
    futures = [(n, pool.submit(_execute_job, a)) for n, a in jobs_args]
    try:
      for n, f in futures:
        records[n] = f.result()
    except KeyboardInterrupt:
      logging.warning('Interrupted: cancelling {} pending runs'.format(sum(1 for _, f in futures if not f.done())))
      pool.shutdown(wait=False, cancel_futures=True)
      _flush(records, store, reuse)
      raise
    pool.shutdown()
  else:
    try:
      for n, a in jobs_args:
        records[n] = execute(workbench, *a)
    except KeyboardInterrupt:
      _flush(records, store, reuse)
      raise
  _flush(records, store, reuse)
  nok = sum(1 for r in records if r.valid())
  logging.info('Done {} {} {}: {} ok, {} failed'.format(task.region, task.key(), tag, nok, len(records) - nok))
  return records

def _flush(records, store, reuse):
  ### leading completed records only, so the store stays in sweep order
  for r in records:
    if r is None:
      break
    if store is not None:
      store.append(r)
    if reuse is not None:
      reuse.setdefault((r.config.key(), r.window_policy), r)

##############################################################################################################
### Baselines / normalization ################################################################################
##############################################################################################################

def select_baseline(records, dimension):
  if dimension == 'model_selection':
    return BASELINE_FAMILY
  if dimension == 'ts_length':
    return BASELINE_WINDOW
  valid = [r for r in records if r.valid()]
  if len(valid) == 0:
    raise EmptyResultError('no valid record to select a baseline from')
  mean = float(np.mean([r.report.accuracy for r in valid]))
  return min(valid, key=lambda r: (abs(r.report.accuracy - mean), r.config.key())).config

def usable(record, metric):
  if not record.valid():
    return False
  v = record.report.score(metric)
  if not np.isfinite(v):
    return False
  if metric == 'mape' and record.report.mape_excluded_terms > record.report.n / 2.0:
    return False
  return True

class Normalized(NamedTuple):
  values: dict      ### run_id -> normalized score, larger is better
  lo: float
  hi: float
  degenerate: bool
  dropped: list     ### run_ids left out

def normalize_scores(records, metric):
  kept = [r for r in records if usable(r, metric)]
  dropped = [r.run_id for r in records if not usable(r, metric)]
  if len(kept) == 0:
    raise EmptyResultError('no valid {} score to normalize'.format(metric))
  raw = np.array([r.report.score(metric) for r in kept])
  lo, hi = float(raw.min()), float(raw.max())
  if hi == lo:
    return Normalized({r.run_id: 0.5 for r in kept}, lo, hi, True, dropped)
  z = (raw - lo) / (hi - lo)
  if not HIGHER_IS_BETTER[metric]:
    z = 1.0 - z
  return Normalized({r.run_id: float(v) for r, v in zip(kept, z)}, lo, hi, False, dropped)

def _dimension_scores(records, dimension, normalized):
  return [(r, normalized.values[r.run_id]) for r in records if r.dimension == dimension and r.run_id in normalized.values]

def improvement(records, dimension, baseline_settings, metric, normalized=None):
  if normalized is None:
    normalized = normalize_scores(records, metric)
  scores = _dimension_scores(records, dimension, normalized)
  base = [z for r, z in scores if r.settings() == baseline_settings]
  if len(base) == 0:
    raise MissingBaselineError('no valid baseline record for {} {}'.format(dimension, metric))
  return (max(z for _, z in scores) - base[0]) * 100.0

def variation(records, dimension, metric, normalized=None):
  if normalized is None:
    normalized = normalize_scores(records, metric)
  scores = [z for _, z in _dimension_scores(records, dimension, normalized)]
  if len(scores) == 0:
    raise EmptyResultError('no valid {} record for {}'.format(metric, dimension))
  return (max(scores) - min(scores)) * 100.0

##############################################################################################################
### AttributionReport ########################################################################################
##############################################################################################################

@dataclass(frozen=True)
class Cell:
  baseline_score: float
  improvement_pct: float
  variation_pct: float
  n_valid: int = 0

@dataclass(frozen=True)
class AttributionReport:
  task_key: str
  region: str
  cells: dict         ### (metric, dimension) -> Cell
  bounds: dict        ### metric -> (lo, hi, degenerate)
  scope: str = 'task'
  n_regions: int = 1

  def cell(self, metric, dimension):
    return self.cells[(metric, dimension)]

  def as_dict(self):
    return json_safe({
      'task': self.task_key,
      'region': self.region,
      'normalization_scope': self.scope,
      'n_regions': self.n_regions,
      'bounds': {m: {'min': b[0], 'max': b[1], 'degenerate': b[2]} for m, b in self.bounds.items()},
      'cells': [dict(metric=m, dimension=d, **asdict(c)) for (m, d), c in sorted(self.cells.items(), key=lambda kv: (METRICS.index(kv[0][0]), DIMENSIONS.index(kv[0][1])))],
    })

  def csv_rows(self, metrics=METRICS):
    rows = [('task', 'region', 'metric', 'dimension', 'baseline', 'improvement_pct', 'variation_pct')]
    for m in metrics:
      for d in DIMENSIONS:
        c = self.cells[(m, d)]
        rows.append((self.task_key, self.region, m, DIMENSION_TAGS[d], _fmt(c.baseline_score), _fmt(c.improvement_pct), _fmt(c.variation_pct)))
    return rows

  def table(self, field='improvement_pct'):
    ### MS/HT/LEN rows across the metric columns
    lines = ['{} {} ({})'.format(self.task_key, self.region, field)]
    lines.append('{:<5}'.format('') + ''.join('{:>10}'.format(m) for m in METRICS))
    for d in DIMENSIONS:
      lines.append('{:<5}'.format(DIMENSION_TAGS[d]) + ''.join('{:>10}'.format(_fmt(getattr(self.cells[(m, d)], field), 2)) for m in METRICS))
    return '\n'.join(lines)

def _fmt(v, digits=6):
  if v is None or not np.isfinite(v):
    return 'nan'
  return '{:.{}f}'.format(v, digits)

def comparison_records(records):
  ### HT records of the other families only select their baselines and stay out of the comparison
  return [r for r in records if r.dimension != 'hyperparameter_tuning' or r.config.family == BASELINE_FAMILY]

def baselines_from_records(records):
  ht = [r for r in records if r.dimension == 'hyperparameter_tuning' and r.config.family == BASELINE_FAMILY]
  settings = Settings(select_baseline(ht, 'hyperparameter_tuning'), BASELINE_WINDOW)
  return {d: settings for d in DIMENSIONS}

def attribution_report(records, baselines=None, metrics=METRICS):
  records = comparison_records(records)
  if len(records) == 0:
    raise EmptyResultError('no record to attribute')
  tasks = set((r.task.region, r.task.key()) for r in records)
  if len(tasks) != 1:
    raise SweepError('records mix several tasks: {}'.format(sorted(tasks)))
  region, key = tasks.pop()
  for d in DIMENSIONS:
    if not any(r.valid() for r in records if r.dimension == d):
      raise EmptyResultError('{} {}: dimension {} has no valid run'.format(region, key, d))
  if baselines is None:
    baselines = baselines_from_records(records)

  cells, bounds = {}, {}
  for m in metrics:
    try:
      norm = normalize_scores(records, m)
    except EmptyResultError:
      norm = None
    bounds[m] = (norm.lo, norm.hi, norm.degenerate) if norm is not None else (float('nan'), float('nan'), False)
    for d in DIMENSIONS:
      base = [r for r in records if r.dimension == d and r.settings() == baselines[d] and usable(r, m)]
      n_valid = sum(1 for r in records if r.dimension == d and usable(r, m))
      try:
        imp = improvement(records, d, baselines[d], m, norm) if norm is not None else float('nan')
        var = variation(records, d, m, norm) if norm is not None else float('nan')
      except (MissingBaselineError, EmptyResultError) as e:
        logging.warning('{} {} {} {}: {}'.format(region, key, m, DIMENSION_TAGS[d], e))
        imp, var = float('nan'), float('nan')
      cells[(m, d)] = Cell(base[0].report.score(m) if base else float('nan'), imp, var, n_valid)
      if np.isfinite(imp) and np.isfinite(var):
        assert -1e-9 <= imp <= var + 1e-9 <= 100.0 + 2e-9, 'improvement {} > variation {}'.format(imp, var)
  return AttributionReport(key, region, cells, bounds)

def aggregate_reports(reports):
  ### region averages per task; cells without a finite value in some region average the others
  if len(reports) == 0:
    raise EmptyResultError('no report to aggregate')
  keys = set(r.task_key for r in reports)
  if len(keys) != 1:
    raise SweepError('cannot average reports of tasks {}'.format(sorted(keys)))
  cells = {}
  for c in reports[0].cells:
    def mean(field):
      vals = [getattr(r.cells[c], field) for r in reports if np.isfinite(getattr(r.cells[c], field))]
      return float(np.mean(vals)) if vals else float('nan')
    cells[c] = Cell(mean('baseline_score'), mean('improvement_pct'), mean('variation_pct'), sum(r.cells[c].n_valid for r in reports))
  bounds = {m: (float('nan'), float('nan'), False) for m in reports[0].bounds}
  return AttributionReport(keys.pop(), 'ALL', cells, bounds, reports[0].scope, len(reports))

def records_by_task(records):
  ### run log records grouped by (task key, region), tasks then regions in their canonical order
  groups = {}
  for r in records:
    groups.setdefault((r.task.key(), r.task.region), []).append(r)
  order = lambda k: (list(TASK_KEYS).index(k[0]), REGIONS.index(k[1]))
  return [(k, groups[k]) for k in sorted(groups, key=order)]

def plot_rows(reports, metrics=METRICS):
  ### bar data: improvement and variation per (task, region, metric, dimension)
  rows = [('task', 'region', 'metric', 'dimension', 'improvement_pct', 'variation_pct')]
  for rep in reports:
    for m in metrics:
      for d in DIMENSIONS:
        c = rep.cells[(m, d)]
        rows.append((rep.task_key, rep.region, m, DIMENSION_TAGS[d], _fmt(c.improvement_pct), _fmt(c.variation_pct)))
  return rows

def write_reports(reports, output_dir, prefix, provenance, plot_metrics=None):
  ### one JSON and one CSV document per report, plus bar data for plot_metrics
  for rep in reports:
    name = os.path.join(output_dir, '{}.{}.{}'.format(prefix, rep.task_key, rep.region))
    write_json(name + '.json', dict(provenance, report=rep.as_dict()))
    write_csv(name + '.csv', rep.csv_rows())
  if plot_metrics:
    write_csv(os.path.join(output_dir, '{}.plot.csv'.format(prefix)), plot_rows(reports, plot_metrics))

def render_reports(reports, fmt):
  if fmt == 'json':
    return json.dumps([rep.as_dict() for rep in reports], indent=2, sort_keys=True)
  if fmt == 'csv':
    rows = [reports[0].csv_rows()[0]] + [row for rep in reports for row in rep.csv_rows()[1:]]
    return '\n'.join(','.join(row) for row in rows)
  return '\n\n'.join(rep.table(f) for rep in reports for f in ('improvement_pct', 'variation_pct'))

##############################################################################################################
### Protocol #################################################################################################
##############################################################################################################

def default_grids(horizon, reduced=True):
  return {f: hyper_grid(f, horizon, reduced) for f in FAMILIES}

def run_task(workbench, task, grids, jobs=1, store=None, timings=False):
  ### hyperparameter sweeps for every family, then model selection and training length around the baselines
  task = task.with_policy(BASELINE_WINDOW)
  reuse = {}
  records, family_baseline = [], {}
  for family in FAMILIES:
    if family not in grids:
      continue
    sweep = [Settings(c, BASELINE_WINDOW) for c in grids[family]]
    recs = run_dimension(workbench, task, 'hyperparameter_tuning', sweep[0], sweep, jobs, store, timings, reuse)
    records.extend(recs)
    try:
      family_baseline[family] = select_baseline(recs, 'hyperparameter_tuning')
    except EmptyResultError:
      logging.warning('{} {}: every {} run failed, using {} as its baseline'.format(task.region, task.key(), family, sweep[0].config))
      family_baseline[family] = sweep[0].config
  if BASELINE_FAMILY not in family_baseline:
    raise SweepError('grids lack the baseline family {}'.format(BASELINE_FAMILY))

  base = Settings(family_baseline[BASELINE_FAMILY], BASELINE_WINDOW)
  ms = [Settings(family_baseline[f], BASELINE_WINDOW) for f in FAMILIES if f in family_baseline]
  records.extend(run_dimension(workbench, task, 'model_selection', base, ms, jobs, store, timings, reuse))
  ln = [Settings(base.config, w) for w in WINDOW_POLICIES]
  records.extend(run_dimension(workbench, task, 'ts_length', base, ln, jobs, store, timings, reuse))
  report = attribution_report(records, {d: base for d in DIMENSIONS})
  return records, report

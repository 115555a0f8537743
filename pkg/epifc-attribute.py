#!/usr/bin/env python3

import os
import sys
import time
import logging
from epifc.Errors import EpifcError, EmptyResultError
from epifc.TimeSeries import REGIONS, TASK_KEYS, task_from_key
from epifc.Metrics import METRICS
from epifc.Forecasters import stub_grids
from epifc.Harness import Workbench, RunStore, run_task, default_grids, aggregate_reports, write_reports, render_reports
from tools.Options import BaseOptions

######################################################################
### Options ##########################################################
######################################################################

class Options(BaseOptions):
  USAGE = '''usage: {prog} [--task KEY] [--region CODE] [--all-regions] [--all-tasks] [options]
   --task          STRING : 7-C, 28-C, 7-D or 28-D ({o.task})
   --region        STRING : state code CA, NY, TX, MN or HI ({o.region})
   --all-regions          : every region, plus the region-averaged report
   --all-tasks            : every task
   --family        STRING : stub runs deterministic stub forecasters instead of the models
   --metric        STRING : metric of the plot data, repeatable (accuracy)
   --plot-data            : write improvement/variation bar data as csv
   --timings              : record wall times in the run store (runs are no longer byte-identical)
   Tunes one dimension at a time (model selection, hyperparameter tuning, training length)
   around the SEIR-HCD / 200-day baselines and writes the run store and JSON + CSV reports into --output-dir.
'''

  def defaults(self):
    self.task = '7-C'
    self.region = 'HI'
    self.all_regions = False
    self.all_tasks = False
    self.family = None
    self.metric = []
    self.plot_data = False
    self.timings = False

  def parse(self, tok, argv):
    if tok == '--task':
      self.task = self.value(tok, argv)
    elif tok == '--region':
      self.region = self.value(tok, argv)
    elif tok == '--all-regions':
      self.all_regions = True
    elif tok == '--all-tasks':
      self.all_tasks = True
    elif tok == '--family':
      self.family = self.value(tok, argv)
    elif tok == '--metric':
      self.metric.append(self.value(tok, argv))
    elif tok == '--plot-data':
      self.plot_data = True
    elif tok == '--timings':
      self.timings = True
    else:
      return False
    return True

  def check(self):
    if self.task not in TASK_KEYS:
      self.usage('unknown task {} (expected one of {})'.format(self.task, ', '.join(TASK_KEYS)))
    if self.region not in REGIONS:
      self.usage('unknown region {} (expected one of {})'.format(self.region, ', '.join(REGIONS)))
    if self.family not in (None, 'stub'):
      self.usage('--family only accepts stub')
    for m in self.metric:
      if m not in METRICS:
        self.usage('unknown metric {} (expected one of {})'.format(m, ', '.join(METRICS)))

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  stub = o.family == 'stub'
  keys = list(TASK_KEYS) if o.all_tasks else [o.task]
  regions = list(REGIONS) if o.all_regions else [o.region]
  prefix = 'attribute.stub' if stub else 'attribute'

  try:
    workbench = Workbench.from_dir(o.data_dir, seed=o.seed, stub=stub)
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)
  provenance = {'seed': o.seed, 'reduced_grid': o.reduced_grid, 'stub': stub, 'snapshot_sha256': {t: workbench.sha256(t) for t in workbench.snapshots}}

  reports, failures = [], []
  fstore = os.path.join(o.output_dir, prefix + '.runs.ndjson')
  try:
    with RunStore(fstore) as store:
      for key in keys:
        task_reports = []
        for region in regions:
          task = task_from_key(key, region)
          grids = stub_grids() if stub else default_grids(task.horizon, o.reduced_grid)
          try:
            records, report = run_task(workbench, task, grids, o.jobs, store, o.timings)
          except EmptyResultError as e:
            logging.error('{} {}: {}'.format(key, region, e))
            failures.append((key, region, str(e)))
            continue
          logging.info('{} {}: {} runs'.format(key, region, len(records)))
          task_reports.append(report)
        if o.all_regions and len(task_reports) > 0:
          task_reports.append(aggregate_reports(task_reports))
        reports.extend(task_reports)
  except KeyboardInterrupt:
    logging.warning('Interrupted, completed runs kept in {}'.format(fstore))
    sys.exit(130)
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)

  if len(reports) > 0:
    write_reports(reports, o.output_dir, prefix, provenance, (o.metric or ['accuracy']) if o.plot_data else None)
    print(render_reports(reports, o.format))
  for key, region, reason in failures:
    logging.error('no report for {} {}: {}'.format(key, region, reason))

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))
  if len(failures) > 0:
    sys.exit(3)

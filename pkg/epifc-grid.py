#!/usr/bin/env python3

import os
import sys
import time
import json
import logging
from epifc.Errors import EpifcError, FitError, EmptyResultError
from epifc.TimeSeries import REGIONS, TARGETS, HORIZONS, ForecastTask
from epifc.Metrics import METRICS, HIGHER_IS_BETTER, REPORT_FIELDS
from epifc.Sarima import reduced_space, full_space, grid_search
from epifc.Forecasters import FAMILIES, hyper_grid
from epifc.Harness import Workbench, Settings, RunStore, run_dimension, json_safe
from tools.Tools import write_json
from tools.Options import BaseOptions

######################################################################
### Options ##########################################################
######################################################################

class Options(BaseOptions):
  USAGE = '''usage: {prog} --state CODE --target STRING --horizon INT --family STRING [options]
   --state         STRING : state code CA, NY, TX, MN or HI
   --target        STRING : confirmed or death ({o.target})
   --horizon          INT : 7 or 28 ({o.horizon})
   --window        STRING : vaccine, 200 or full ({o.window})
   --family        STRING : sarima, seirhcd or acts ({o.family})
   --criterion     STRING : ranking metric ({o.criterion})
   --top              INT : configurations printed ({o.top})
   --timings              : record wall times in the run store
   --stub                 : score every configuration with the deterministic stub forecaster
   sarima orders are ranked on the last --horizon days of the training window;
   seirhcd and acts configurations are ranked on the test days, as the hyperparameter tuning dimension does.
'''

  def defaults(self):
    self.state = None
    self.target = 'confirmed'
    self.horizon = 7
    self.window = 'fixed_200'
    self.family = 'sarima'
    self.criterion = 'accuracy'
    self.top = 10
    self.timings = False
    self.stub = False

  def parse(self, tok, argv):
    if tok == '--state':
      self.state = self.value(tok, argv)
    elif tok == '--target':
      self.target = self.value(tok, argv)
    elif tok == '--horizon':
      self.horizon = self.value(tok, argv, int)
    elif tok == '--window':
      self.window = self.policy(tok, argv)
    elif tok == '--family':
      self.family = self.value(tok, argv)
    elif tok == '--criterion':
      self.criterion = self.value(tok, argv)
    elif tok == '--top':
      self.top = self.value(tok, argv, int)
    elif tok == '--timings':
      self.timings = True
    elif tok == '--stub':
      self.stub = True
    else:
      return False
    return True

  def check(self):
    if self.state not in REGIONS:
      self.usage('missing or unknown --state {} (expected one of {})'.format(self.state, ', '.join(REGIONS)))
    if self.target not in TARGETS:
      self.usage('unknown target {}'.format(self.target))
    if self.horizon not in HORIZONS:
      self.usage('bad --horizon {}'.format(self.horizon))
    if self.family not in FAMILIES:
      self.usage('unknown family {}'.format(self.family))
    if self.criterion not in METRICS:
      self.usage('unknown criterion {} (expected one of {})'.format(self.criterion, ', '.join(METRICS)))

def sarima_rows(workbench, task, o):
  train = workbench.dataset(task).train
  space = reduced_space() if o.reduced_grid else full_space()
  result = grid_search(train, space, task.horizon, o.criterion, o.seed, o.jobs)
  rows = [{'config': 'SARIMA{}'.format(order), 'report': report.as_dict()} for order, report in result.ranked]
  failed = [{'config': 'SARIMA{}'.format(order), 'reason': reason} for order, reason in result.failed]
  return rows, failed

def sweep_rows(workbench, task, o, store):
  sweep = [Settings(c, task.window_policy) for c in hyper_grid(o.family, task.horizon, o.reduced_grid)]
  records = run_dimension(workbench, task, 'hyperparameter_tuning', sweep[0], sweep, o.jobs, store, o.timings)
  ok = [r for r in records if r.valid()]
  if len(ok) == 0:
    raise FitError('every {} configuration failed'.format(o.family))
  sign = -1.0 if HIGHER_IS_BETTER[o.criterion] else 1.0
  ok.sort(key=lambda r: (sign * r.report.score(o.criterion), r.config.key()))
  rows = [{'config': str(r.config), 'report': r.report.as_dict()} for r in ok]
  failed = [{'config': str(r.config), 'reason': r.reason} for r in records if not r.valid()]
  return rows, failed

def fmt_score(v):
  return 'nan' if v is None else '{:.6f}'.format(v)

def render(doc, criterion, top, fmt):
  if fmt == 'json':
    return json.dumps(doc, indent=2, sort_keys=True)
  sep = ',' if fmt == 'csv' else '\t'
  lines = [sep.join(('rank', 'config', criterion))]
  for n, r in enumerate(doc['ranked'][:top], 1):
    lines.append(sep.join((str(n), r['config'], fmt_score(r['report'][REPORT_FIELDS[criterion]]))))
  return '\n'.join(lines)

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  task = ForecastTask(o.state, o.target, o.horizon, o.window)
  name = 'grid.{}.{}.{}.{}'.format(task.region, task.key(), o.family, o.window)
  try:
    workbench = Workbench.from_dir(o.data_dir, seed=o.seed, stub=o.stub)
    if o.family == 'sarima' and not o.stub:
      rows, failed = sarima_rows(workbench, task, o)
    else:
      with RunStore(os.path.join(o.output_dir, name + '.runs.ndjson')) as store:
        rows, failed = sweep_rows(workbench, task, o, store)
  except (FitError, EmptyResultError) as e:
    logging.error(str(e))
    sys.exit(2)
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)

  doc = json_safe({'task': task.key(), 'region': task.region, 'window_policy': o.window, 'family': o.family, 'criterion': o.criterion, 'stub': o.stub, 'snapshot_sha256': workbench.sha256(task.target), 'ranked': rows, 'failed': failed})
  write_json(os.path.join(o.output_dir, name + '.json'), doc)
  print(render(doc, o.criterion, o.top, o.format))

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))

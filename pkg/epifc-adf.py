#!/usr/bin/env python3

import sys
import time
import json
import logging
from epifc.Errors import EpifcError
from epifc.TimeSeries import REGIONS, TARGETS, HORIZONS, ForecastTask
from epifc.Preprocessing import boxcox_fit, boxcox_apply, stationarity_differencing, difference, adf_test, ADF_CRITICAL_VALUES
from epifc.Harness import Workbench
from tools.Options import BaseOptions

######################################################################
### Options ##########################################################
######################################################################

class Options(BaseOptions):
  USAGE = '''usage: {prog} [--state CODE] [--target STRING] [--horizon INT] [--window STRING]
   --state         STRING : state code CA, NY, TX, MN or HI (all)
   --target        STRING : confirmed or death (both)
   --horizon          INT : 7 or 28, selects the training window end ({o.horizon})
   --window        STRING : vaccine, 200 or full ({o.window})
   Box-Cox transforms each training window, differences it (twice for confirmed, once for deaths)
   and runs the augmented Dickey-Fuller test.
'''

  def defaults(self):
    self.state = None
    self.target = None
    self.horizon = 7
    self.window = 'fixed_200'

  def parse(self, tok, argv):
    if tok == '--state':
      self.state = self.value(tok, argv)
    elif tok == '--target':
      self.target = self.value(tok, argv)
    elif tok == '--horizon':
      self.horizon = self.value(tok, argv, int)
    elif tok == '--window':
      self.window = self.policy(tok, argv)
    else:
      return False
    return True

  def check(self):
    if self.state is not None and self.state not in REGIONS:
      self.usage('unknown state {} (expected one of {})'.format(self.state, ', '.join(REGIONS)))
    if self.target is not None and self.target not in TARGETS:
      self.usage('unknown target {}'.format(self.target))
    if self.horizon not in HORIZONS:
      self.usage('bad --horizon {}'.format(self.horizon))

def adf_row(workbench, task):
  train = workbench.dataset(task).train
  transform = boxcox_fit(train)
  w = difference(stationarity_differencing(task.target), boxcox_apply(transform, train))
  result = adf_test(w)
  logging.info('{} {}: lambda={:.4f} ADF={:.3f} lags={}'.format(task.region, task.target, transform.lmbda, result.statistic, result.lags_used))
  return {'state': task.region, 'target': task.target, 'window': task.window_policy, 'lambda': transform.lmbda, 'statistic': result.statistic, 'lags': result.lags_used, 'reject_5pct': result.rejects('5%')}

def render(rows, fmt):
  if fmt == 'json':
    return json.dumps({'critical_values': dict(ADF_CRITICAL_VALUES), 'tests': rows}, indent=2)
  fields = ['state', 'target', 'lambda', 'statistic', 'lags', 'reject_5pct']
  sep = ',' if fmt == 'csv' else '\t'
  lines = [sep.join(fields)]
  for r in rows:
    lines.append(sep.join('{:.4f}'.format(r[f]) if isinstance(r[f], float) else str(r[f]) for f in fields))
  return '\n'.join(lines)

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  try:
    workbench = Workbench.from_dir(o.data_dir, seed=o.seed)
    rows = []
    for target in ([o.target] if o.target else TARGETS):
      for state in ([o.state] if o.state else REGIONS):
        rows.append(adf_row(workbench, ForecastTask(state, target, o.horizon, o.window)))
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)
  print(render(rows, o.format))

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))

#!/usr/bin/env python3

import os
import sys
import time
import json
import logging
from epifc.Errors import EpifcError, FitError, NotTrainedError
from epifc.TimeSeries import REGIONS, TARGETS, HORIZONS, ForecastTask, ONE_DAY
from epifc.Metrics import evaluate
from epifc.Sarima import parse_order
from epifc.Model import ActsHyper
from epifc.Forecasters import FAMILIES, default_config, sarima_config, seirhcd_config, acts_config, stub_config, forecast_task
from epifc.Harness import Workbench, Settings, record_seed, json_safe
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
   --family        STRING : sarima, seirhcd, acts or stub ({o.family})
   [SARIMA]
   --order    p,d,q,P,D,Q : seasonal order, s=7 (1,1,1,1,0,1)
   [SEIR-HCD]
   --starts           INT : multistart initializations from the parameter grid (32 reduced, all with --full-grid)
   [ACTS]
   --epochs           INT : training epochs ({o.epochs})
   --hidden           INT : embedding size ({o.hidden})
   --rate           FLOAT : learning rate ({o.rate})
   [stub]
   --stub-level     FLOAT : constant added to the forecast ({o.stub_level})
   --stub-scale     FLOAT : factor applied to the training mean ({o.stub_scale})
   Writes the forecast, truth, metrics and provenance as JSON into --output-dir.
'''

  def defaults(self):
    self.state = None
    self.target = 'confirmed'
    self.horizon = 7
    self.window = 'fixed_200'
    self.family = 'seirhcd'
    self.order = None
    self.starts = None
    self.epochs = 600
    self.hidden = 16
    self.rate = 0.005
    self.stub_level = 0.0
    self.stub_scale = 1.0

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
    elif tok == '--order':
      self.order = self.value(tok, argv)
    elif tok == '--starts':
      self.starts = self.value(tok, argv, int)
    elif tok == '--epochs':
      self.epochs = self.value(tok, argv, int)
    elif tok == '--hidden':
      self.hidden = self.value(tok, argv, int)
    elif tok == '--rate':
      self.rate = self.value(tok, argv, float)
    elif tok == '--stub-level':
      self.stub_level = self.value(tok, argv, float)
    elif tok == '--stub-scale':
      self.stub_scale = self.value(tok, argv, float)
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
    if self.family not in FAMILIES + ('stub',):
      self.usage('unknown family {}'.format(self.family))
    if self.order is not None:
      try:
        parse_order(self.order)
      except (ValueError, AssertionError):
        self.usage('bad --order {} (expected p,d,q,P,D,Q)'.format(self.order))
    if self.starts is not None and self.starts < 1:
      self.usage('--starts must be >= 1')
    if self.epochs < 0 or self.hidden < 1 or self.rate < 0:
      self.usage('bad ACTS hyperparameters')

  def model_config(self):
    if self.family == 'stub':
      return stub_config('seirhcd', self.stub_level, self.stub_scale)
    if self.family == 'sarima' and self.order is not None:
      return sarima_config(parse_order(self.order))
    if self.family == 'seirhcd' and self.starts is not None:
      return seirhcd_config(max_starts=self.starts)
    if self.family == 'acts':
      return acts_config(ActsHyper(self.epochs, self.hidden, self.rate, horizon=self.horizon))
    return default_config(self.family, self.reduced_grid)

def render(doc, fmt):
  if fmt == 'json':
    return json.dumps(doc, indent=2, sort_keys=True)
  sep = ',' if fmt == 'csv' else '\t'
  lines = [sep.join(('date', 'forecast', 'truth'))]
  for d, f, t in zip(doc['dates'], doc['forecast'], doc['truth']):
    lines.append(sep.join((d, '{:.3f}'.format(f), '{:.1f}'.format(t))))
  if fmt == 'table':
    lines.append('')
    lines.extend('{:<20}{}'.format(k, v) for k, v in doc['report'].items())
  return '\n'.join(lines)

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  task = ForecastTask(o.state, o.target, o.horizon, o.window)
  config = o.model_config()
  seed = record_seed(o.seed, task, Settings(config, o.window))
  fout = os.path.join(o.output_dir, 'forecast.{}.{}.{}.{}.json'.format(task.region, task.key(), o.family, o.window))
  doc = {'task': {'region': task.region, 'target': task.target, 'horizon': task.horizon}, 'window_policy': o.window, 'config': config.as_dict(), 'stub': o.family == 'stub', 'seed': seed}

  try:
    workbench = Workbench.from_dir(o.data_dir, seed=o.seed, stub=o.family == 'stub')
    data = workbench.dataset(task)
    doc['snapshot_sha256'] = data.snapshot_sha256
    doc['train'] = {'start': str(data.train.start_date), 'end': str(data.train.end_date), 'length': len(data.train)}
    result = forecast_task(workbench, task, config, seed)
  except (FitError, NotTrainedError) as e:
    logging.error(str(e))
    doc.update({'status': 'fit_failed', 'reason': str(e)})
    write_json(fout, json_safe(doc))
    sys.exit(2)
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)

  report = evaluate(data.test.values, result.forecast)
  doc.update({
    'status': 'ok' if report.valid else 'invalid_metrics',
    'dates': [str(data.test.start_date + i * ONE_DAY) for i in range(task.horizon)],
    'forecast': result.forecast,
    'truth': [float(v) for v in data.test.values],
    'report': report.as_dict(),
    'info': result.info,
  })
  doc = json_safe(doc)
  write_json(fout, doc)
  print(render(doc, o.format))

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))

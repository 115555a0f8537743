#!/usr/bin/env python3

import os
import sys
import time
import logging
from epifc.Errors import EpifcError, EmptyResultError
from epifc.Metrics import METRICS
from epifc.Harness import RunStore, records_by_task, attribution_report, aggregate_reports, write_reports, render_reports
from tools.Options import BaseOptions

######################################################################
### Options ##########################################################
######################################################################

class Options(BaseOptions):
  USAGE = '''usage: {prog} -runs FILE [-runs FILE ...] [--prefix STRING] [--metric STRING] [--plot-data]
   -runs             FILE : run store (ndjson) written by epifc-attribute.py (repeatable)
   --prefix        STRING : output file prefix ({o.prefix})
   --average              : add the region-averaged report of every task
   --metric        STRING : metric of the plot data, repeatable (accuracy)
   --plot-data            : write improvement/variation bar data as csv
   Rebuilds attribution reports from stored runs without running any model.
'''

  def defaults(self):
    self.runs = []
    self.prefix = 'report'
    self.average = False
    self.metric = []
    self.plot_data = False

  def parse(self, tok, argv):
    if tok == '-runs':
      self.runs.append(self.value(tok, argv))
    elif tok == '--prefix':
      self.prefix = self.value(tok, argv)
    elif tok == '--average':
      self.average = True
    elif tok == '--metric':
      self.metric.append(self.value(tok, argv))
    elif tok == '--plot-data':
      self.plot_data = True
    else:
      return False
    return True

  def check(self):
    if len(self.runs) == 0:
      self.usage('missing -runs option')
    for f in self.runs:
      if not os.path.isfile(f):
        self.usage('cannot find run store {}'.format(f))
    for m in self.metric:
      if m not in METRICS:
        self.usage('unknown metric {} (expected one of {})'.format(m, ', '.join(METRICS)))

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  try:
    records = [r for f in o.runs for r in RunStore.load(f)]
  except (EpifcError, ValueError, KeyError) as e:
    logging.error('bad run store: {}'.format(e))
    sys.exit(1)

  reports, failures, by_key = [], [], {}
  for (key, region), recs in records_by_task(records):
    try:
      rep = attribution_report(recs)
    except EmptyResultError as e:
      logging.error('{} {}: {}'.format(key, region, e))
      failures.append((key, region))
      continue
    except EpifcError as e:
      logging.error('{} {}: {}'.format(key, region, e))
      sys.exit(1)
    reports.append(rep)
    by_key.setdefault(key, []).append(rep)
  if o.average:
    reports.extend(aggregate_reports(reps) for reps in by_key.values() if len(reps) > 1)

  shas = sorted(set(r.snapshot_sha256 for r in records))
  if len(reports) > 0:
    write_reports(reports, o.output_dir, o.prefix, {'runs': o.runs, 'snapshot_sha256': shas}, (o.metric or ['accuracy']) if o.plot_data else None)
    print(render_reports(reports, o.format))

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))
  if len(failures) > 0:
    sys.exit(3)

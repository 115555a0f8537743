#!/usr/bin/env python3

import sys
import time
import json
import logging
import datetime
from epifc.Errors import EpifcError
from epifc.TimeSeries import REGIONS, TARGETS, summary_stats, SummaryStats, slice_window
from epifc.Dataset import load_snapshots, state_daily, STATE_NAMES
from tools.Options import BaseOptions

######################################################################
### Options ##########################################################
######################################################################

class Options(BaseOptions):
  USAGE = '''usage: {prog} [--state CODE] [--target STRING] [--convention STRING]
   --state         STRING : state code CA, NY, TX, MN or HI (all)
   --target        STRING : confirmed or death (both)
   --convention    STRING : population or sample moments ({o.convention})
   --start           DATE : first day YYYY-MM-DD (snapshot start)
   --end             DATE : last day YYYY-MM-DD (snapshot end)
'''

  def defaults(self):
    self.state = None
    self.target = None
    self.convention = 'sample'
    self.start = None
    self.end = None

  def parse(self, tok, argv):
    if tok == '--state':
      self.state = self.value(tok, argv)
    elif tok == '--target':
      self.target = self.value(tok, argv)
    elif tok == '--convention':
      self.convention = self.value(tok, argv)
    elif tok == '--start':
      self.start = self.value(tok, argv, datetime.date.fromisoformat)
    elif tok == '--end':
      self.end = self.value(tok, argv, datetime.date.fromisoformat)
    else:
      return False
    return True

  def check(self):
    if self.state is not None and self.state not in STATE_NAMES:
      self.usage('unknown state {} (expected one of {})'.format(self.state, ', '.join(REGIONS)))
    if self.target is not None and self.target not in TARGETS:
      self.usage('unknown target {}'.format(self.target))
    if self.convention not in ('population', 'sample'):
      self.usage('bad --convention {}'.format(self.convention))

def render(rows, fmt):
  if fmt == 'json':
    objs = [dict(series=label, convention=stats.convention, **stats.as_dict()) for label, stats in rows]
    return json.dumps(objs[0] if len(objs) == 1 else objs, indent=2)
  sep = ',' if fmt == 'csv' else ' '
  cell = '{}' if fmt == 'csv' else '{:>12}'
  lines = [sep.join([cell.format('series')] + [cell.format(f) for f in SummaryStats.FIELDS])]
  for label, stats in rows:
    lines.append(sep.join([cell.format(label)] + [cell.format('{:.3f}'.format(v)) for v in stats.as_dict().values()]))
  return '\n'.join(lines)

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  try:
    snapshots = load_snapshots(o.data_dir)
    rows = []
    for target in ([o.target] if o.target else TARGETS):
      for state in ([o.state] if o.state else REGIONS):
        daily = state_daily(snapshots[target], state)
        if o.start is not None or o.end is not None:
          daily = slice_window(daily, o.start or daily.start_date, o.end or daily.end_date)
        rows.append((daily.label, summary_stats(daily, o.convention)))
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)
  print(render(rows, o.format))

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))

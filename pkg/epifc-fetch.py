#!/usr/bin/env python3

import os
import sys
import time
import shutil
import logging
import urllib.error
from epifc.Errors import EpifcError
from epifc.Dataset import SNAPSHOT_FILES, load_snapshot
from tools.Tools import fetch_snapshot
from tools.Options import BaseOptions

JHU_URL = 'https://raw.githubusercontent.com/CSSEGISandData/COVID-19/master/csse_covid_19_data/csse_covid_19_time_series/'

######################################################################
### Options ##########################################################
######################################################################

class Options(BaseOptions):
  USAGE = '''usage: {prog} [--url-confirmed URL] [--url-death URL] [--data-dir DIR] [--cache-dir DIR]
   --url-confirmed    URL : confirmed cases csv ({o.url_confirmed})
   --url-death        URL : deaths csv ({o.url_death})
   Downloads both files into the cache (named by content hash) and copies them into --data-dir.
'''

  def defaults(self):
    self.url_confirmed = JHU_URL + SNAPSHOT_FILES['confirmed']
    self.url_death = JHU_URL + SNAPSHOT_FILES['death']

  def parse(self, tok, argv):
    if tok == '--url-confirmed':
      self.url_confirmed = self.value(tok, argv)
    elif tok == '--url-death':
      self.url_death = self.value(tok, argv)
    else:
      return False
    return True

######################################################################
### MAIN #############################################################
######################################################################

if __name__ == '__main__':

  tic = time.time()
  o = Options(sys.argv)
  os.makedirs(o.data_dir, exist_ok=True)
  try:
    for target, url in (('confirmed', o.url_confirmed), ('death', o.url_death)):
      fcsv, sha = fetch_snapshot(url, o.cache_dir)
      fout = os.path.join(o.data_dir, SNAPSHOT_FILES[target])
      shutil.copyfile(fcsv, fout)
      snapshot = load_snapshot(fout, target) ### parse check
      print('{}\t{}\t{}\t{} - {}'.format(target, sha, fout, snapshot.start_date, snapshot.end_date))
  except (urllib.error.URLError, OSError) as e:
    logging.error('fetch failed: {}'.format(e))
    sys.exit(1)
  except EpifcError as e:
    logging.error(str(e))
    sys.exit(1)

  toc = time.time()
  logging.info('Done ({:.2f} seconds)'.format(toc-tic))

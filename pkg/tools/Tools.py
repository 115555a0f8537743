# -*- coding: utf-8 -*-

import os
import sys
import json
import time
import hashlib
import logging
import urllib.request
import pandas as pd

def create_logger(logfile, loglevel):
  numeric_level = getattr(logging, loglevel.upper(), None)
  if not isinstance(numeric_level, int):
    logging.error("Invalid log level={}".format(loglevel))
    sys.exit(1)
  if logfile is None or logfile == 'stderr':
    logging.basicConfig(format='[%(asctime)s.%(msecs)03d] %(levelname)s %(message)s', datefmt='%Y-%m-%d_%H:%M:%S', level=numeric_level)
    logging.debug('Created Logger level={}'.format(loglevel))
  else:
    logging.basicConfig(filename=logfile, format='[%(asctime)s.%(msecs)03d] %(levelname)s %(message)s', datefmt='%Y-%m-%d_%H:%M:%S', level=numeric_level)
    logging.debug('Created Logger level={} file={}'.format(loglevel, logfile))

def content_hash(text):
  if isinstance(text, str):
    text = text.encode('utf-8')
  return hashlib.sha256(text).hexdigest()

def stable_seed(*parts):
  ### deterministic across processes and runs (unlike hash())
  digest = hashlib.sha256(json.dumps([str(p) for p in parts]).encode('utf-8')).hexdigest()
  return int(digest[:8], 16) % (2**31 - 1)

######################################################################
### Config files #####################################################
######################################################################

def read_config(fconfig):
  if not os.path.isfile(fconfig):
    logging.error('cannot find config file: {}'.format(fconfig))
    sys.exit(1)
  with open(fconfig, 'r', encoding='utf-8') as f:
    config = json.load(f)
  if not isinstance(config, dict):
    logging.error('config file {} must hold a JSON object'.format(fconfig))
    sys.exit(1)
  logging.info('Config = {}'.format(config))
  return config

def write_json(fout, obj):
  dname = os.path.dirname(fout)
  if dname:
    os.makedirs(dname, exist_ok=True)
  with open(fout, 'w', encoding='utf-8') as f:
    f.write(json.dumps(obj, indent=2, sort_keys=True) + '\n')
  logging.info('Wrote {}'.format(fout))

def write_csv(fout, rows):
  ### rows[0] is the header
  dname = os.path.dirname(fout)
  if dname:
    os.makedirs(dname, exist_ok=True)
  pd.DataFrame(list(rows[1:]), columns=list(rows[0])).to_csv(fout, index=False, lineterminator='\n')
  logging.info('Wrote {}'.format(fout))

######################################################################
### Snapshot cache ###################################################
######################################################################

def fetch_snapshot(url, cache_dir):
  ### cache_dir/<sha256>.csv plus manifest.json mapping url -> hash -> retrieval time
  os.makedirs(cache_dir, exist_ok=True)
  fmanifest = os.path.join(cache_dir, 'manifest.json')
  manifest = {}
  if os.path.isfile(fmanifest):
    with open(fmanifest, 'r', encoding='utf-8') as f:
      manifest = json.load(f)
  logging.info('Fetching {}'.format(url))
  with urllib.request.urlopen(url) as response:
    content = response.read()
  sha = content_hash(content)
  fcsv = os.path.join(cache_dir, sha + '.csv')
  if os.path.isfile(fcsv):
    logging.info('Snapshot already cached in {}'.format(fcsv))
  else:
    with open(fcsv, 'wb') as f:
      f.write(content)
    logging.info('Cached snapshot ({} bytes) in {}'.format(len(content), fcsv))
  manifest.setdefault(url, []).append({'sha256': sha, 'retrieved': time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())})
  with open(fmanifest, 'w', encoding='utf-8') as f:
    f.write(json.dumps(manifest, indent=2, sort_keys=True) + '\n')
  return fcsv, sha

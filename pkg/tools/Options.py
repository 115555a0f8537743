# -*- coding: utf-8 -*-

import sys
import random
import logging
import numpy as np
import torch
from tools.Tools import create_logger, read_config

WINDOWS = {'vaccine': 'since_vaccine', '200': 'fixed_200', 'full': 'full_history'}
FORMATS = ('table', 'json', 'csv')

######################################################################
### BaseOptions ######################################################
######################################################################

class BaseOptions():
  ### common flags of every client; subclasses add theirs in defaults()/parse()/check() and describe them in USAGE
  USAGE = ''

  def __init__(self, argv):
    argv = list(argv)
    self.prog = argv.pop(0)
    self.config = None
    self.data_dir = 'data'
    self.cache_dir = 'cache'
    self.output_dir = 'out'
    self.seed = 12345
    self.jobs = 1
    self.reduced_grid = True
    self.format = 'table'
    self.log_file = 'stderr'
    self.log_level = 'info'
    self.defaults()

    if '--config' in argv: ### file values first, command-line flags override them
      i = argv.index('--config')
      if i + 1 >= len(argv):
        self.usage('missing value for --config')
      self.config = argv[i + 1]
      del argv[i:i + 2]
      self.apply_config(read_config(self.config))

    while len(argv):
      tok = argv.pop(0)
      if tok in ('-h', '--help'):
        self.usage()
      elif tok == '--data-dir':
        self.data_dir = self.value(tok, argv)
      elif tok == '--cache-dir':
        self.cache_dir = self.value(tok, argv)
      elif tok == '--output-dir':
        self.output_dir = self.value(tok, argv)
      elif tok == '--seed':
        self.seed = self.value(tok, argv, int)
      elif tok == '--jobs':
        self.jobs = self.value(tok, argv, int)
      elif tok == '--reduced-grid':
        self.reduced_grid = True
      elif tok == '--full-grid':
        self.reduced_grid = False
      elif tok == '--format':
        self.format = self.value(tok, argv)
      elif tok == '--log-file':
        self.log_file = self.value(tok, argv)
      elif tok == '--log-level':
        self.log_level = self.value(tok, argv)
      elif not self.parse(tok, argv):
        self.usage('Unrecognized {} option'.format(tok))

    if self.jobs < 1:
      self.usage('--jobs must be >= 1')
    if self.format not in FORMATS:
      self.usage('bad --format {} (expected one of {})'.format(self.format, ', '.join(FORMATS)))
    if getattr(self, 'window', None) is not None and self.window not in WINDOWS.values():
      self.usage('bad window {} (expected one of {})'.format(self.window, '|'.join(WINDOWS)))
    self.check()

    create_logger(self.log_file, self.log_level)
    random.seed(self.seed)
    np.random.seed(self.seed)
    torch.manual_seed(self.seed)
    logging.info("Options = {}".format(self.__dict__))

  def defaults(self):
    pass

  def parse(self, tok, argv):
    return False

  def check(self):
    pass

  def value(self, tok, argv, cast=str):
    if len(argv) == 0:
      self.usage('missing value for {}'.format(tok))
    v = argv.pop(0)
    try:
      return cast(v)
    except ValueError:
      self.usage('bad value {} for {}'.format(v, tok))

  def policy(self, tok, argv):
    v = self.value(tok, argv)
    if v not in WINDOWS:
      self.usage('bad {} {} (expected one of {})'.format(tok, v, '|'.join(WINDOWS)))
    return WINDOWS[v]

  def apply_config(self, config):
    for k, v in config.items():
      name = k.lstrip('-').replace('-', '_')
      if name == 'window' and v in WINDOWS:
        v = WINDOWS[v]
      if not hasattr(self, name) or name == 'prog':
        self.usage('unknown key {} in config file {}'.format(k, self.config))
      setattr(self, name, v)

  def usage(self, messg=None):
    if messg is not None:
      sys.stderr.write(messg + '\n')
    sys.stderr.write(self.USAGE.format(prog=self.prog, o=self))
    sys.stderr.write('''
   [Common]
   --config          FILE : JSON file with option values, flags override it
   --data-dir         DIR : directory holding the JHU confirmed/deaths csv files ({o.data_dir})
   --cache-dir        DIR : snapshot cache directory ({o.cache_dir})
   --output-dir       DIR : output directory ({o.output_dir})
   --seed             INT : seed for randomness ({o.seed})
   --jobs             INT : worker processes ({o.jobs})
   --reduced-grid         : desk-scale search grids (default)
   --full-grid            : full search grids
   --format        STRING : table, json or csv ({o.format})
   --log-file        FILE : log file (stderr)
   --log-level     STRING : log level [debug, info, warning, critical, error] ({o.log_level})
   -h, --help             : this help
'''.format(o=self))
    sys.exit(0 if messg is None else 1)

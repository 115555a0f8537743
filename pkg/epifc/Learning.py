# -*- coding: utf-8 -*-

import time
import logging
import torch
from epifc.Errors import LengthError, DegenerateError
from epifc.Model import ActsModel, region_batch, save_checkpoint, numparameters
try:
  from torch.utils.tensorboard import SummaryWriter
  tensorboard = True
except ImportError:
  tensorboard = False

##############################################################################################################
### Score ####################################################################################################
##############################################################################################################

class Score():
  def __init__(self):
    self.loss = 0.0
    self.nepoch = 0
    self.start = time.time()

  def step(self, loss):
    self.loss += loss
    self.nepoch += 1

  def report(self):
    end = time.time()
    if self.nepoch:
      return self.loss / self.nepoch, self.nepoch / max(end - self.start, 1e-9)
    logging.warning('Requested report after 0 epochs optimised')
    return 0.0, 0

##############################################################################################################
### Learning #################################################################################################
##############################################################################################################

class Learning():
  def __init__(self, model, optimizer, report_every=100, log_dir=None, fcheckpoint=None):
    super(Learning, self).__init__()
    self.model = model
    self.optimizer = optimizer
    self.report_every = report_every
    self.fcheckpoint = fcheckpoint
    self.writer = None
    if log_dir is not None:
      if tensorboard:
        self.writer = SummaryWriter(log_dir=log_dir, flush_secs=60)
      else:
        logging.warning('tensorboard unavailable, no loss curves written to {}'.format(log_dir))

  def loss(self, batch):
    pred, truth, segs = self.model(batch)
    return torch.mean(torch.abs(pred - truth)) ### MAE over every (i, t) in Omega and every horizon day

  def learn(self, batch, epochs):
    logging.info('Running: learning ({} epochs)'.format(epochs))
    history = []
    score = Score()
    self.model.train()
    for n_epoch in range(1, epochs + 1):
      self.optimizer.zero_grad() ### full batch per epoch
      loss = self.loss(batch)
      loss.backward()
      self.optimizer.step()
      history.append(loss.item())
      score.step(loss.item())
      if self.report_every and n_epoch % self.report_every == 0:
        mae, epochs_per_sec = score.report()
        logging.info('Learning epoch: {} epochs/sec: {:.2f} Loss: {:.4f}'.format(n_epoch, epochs_per_sec, mae))
        score = Score()
      if self.writer is not None:
        self.writer.add_scalar('Loss/train', history[-1], n_epoch)
    self.model.eval()
    with torch.no_grad():
      final = self.loss(batch).item()
    history.append(final)
    self.model.trained.fill_(True)
    if self.fcheckpoint is not None:
      save_checkpoint(self.fcheckpoint, self.model, self.optimizer, epochs)
    if self.writer is not None:
      self.writer.close()
    logging.info('Learning STOP by [epochs={}] final Loss: {:.4f}'.format(epochs, final))
    return history

def check_regions(series, hyper):
  if len(series) < 2:
    raise LengthError('ACTS trains on >= 2 regions, got {}'.format(len(series)))
  need = hyper.seg_len + 2 * hyper.horizon
  for s in series:
    if len(s) < need:
      raise LengthError('region {} has {} values, ACTS needs >= l+2H = {}'.format(getattr(s, 'label', '?'), len(s), need))

def train(series, hyper, names=None, seed=0, report_every=100, log_dir=None, fcheckpoint=None):
  ### returns (model, batch, loss history) where history[0] is the epoch-0 loss and history[-1] the final one
  check_regions(series, hyper)
  batch = region_batch(series, names)
  torch.manual_seed(seed)
  model = ActsModel(batch.names, hyper)
  npars, size = numparameters(model)
  logging.info('Built ACTS model regions={} hidden={} horizon={} ({} parameters, {})'.format(len(batch), hyper.hidden, hyper.horizon, npars, size))
  with torch.no_grad():
    segs = model.segments(batch)
  if bool(segs.degenerate.all()):
    raise DegenerateError('every segment is flat, no attention key available')
  optimizer = torch.optim.Adam(model.parameters(), lr=hyper.rate, betas=(0.9, 0.999))
  history = Learning(model, optimizer, report_every, log_dir, fcheckpoint).learn(batch, hyper.epochs)
  return model, batch, history

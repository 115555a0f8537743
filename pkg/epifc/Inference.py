# -*- coding: utf-8 -*-

import logging
import numpy as np
import torch
from epifc.Errors import NotTrainedError, EmptyResultError
from epifc.Model import detrend

##############################################################################################################
### Inference ################################################################################################
##############################################################################################################

class Inference():
  def __init__(self, model):
    super(Inference, self).__init__()
    if not bool(model.trained):
      raise NotTrainedError('ACTS model has not been trained')
    self.model = model

  def forecast(self, batch, region):
    i0 = batch.index(region) if isinstance(region, str) else int(region)
    with torch.no_grad():
      self.model.eval()
      pred = self.model.predict(batch)[i0]
    logging.debug('ACTS forecast {}: {}'.format(batch.names[i0], ' '.join('{:.1f}'.format(v) for v in pred.tolist())))
    return np.maximum(pred.numpy(), 0.0)

  def attention(self, batch, region):
    ### attention weights of the target region over its keys (i, t)
    i0 = batch.index(region) if isinstance(region, str) else int(region)
    with torch.no_grad():
      segs = self.model.segments(batch)
      v, w = self.model.query(batch, segs)
    return v[i0], w[i0], segs

def forecast(model, batch, region):
  return Inference(model).forecast(batch, region)

def attention_forward(model, segs, target_region):
  ### v_hat for the last segment of target_region; raises when no key is available
  if bool(segs.degenerate.all()):
    raise EmptyResultError('no non-degenerate attention key')
  p, g = model.keys(segs)
  p_q = model.conv_seg(segs.q_seg[target_region:target_region + 1])
  v, _ = model.attn(p_q, p, g, ~segs.degenerate.unsqueeze(0))
  return v[0]

def holt_decomposition(model, batch):
  ### residual + level reproduces the observed values; trend_forecast continues level_T + k*trend_T
  with torch.no_grad():
    residual, level, trend, trend_forecast = detrend(model.holt, batch, model.hyper.horizon)
  return residual, level, trend_forecast

##############################################################################################################
### Gradient check ###########################################################################################
##############################################################################################################

def grad_check(fragment, inputs, epsilon=1e-6, floor=1e-3, seed=0):
  ### max relative error between autograd gradients and central differences over every parameter of fragment
  assert 1e-7 <= epsilon <= 1e-4, 'epsilon outside [1e-7, 1e-4]'
  if not isinstance(inputs, (tuple, list)):
    inputs = (inputs,)

  def scalar(out):
    ### fixed random projection of every output to a scalar
    outs = out if isinstance(out, (tuple, list)) else (out,)
    total = 0.0
    for n, o in enumerate(outs):
      if not torch.is_tensor(o) or not o.is_floating_point():
        continue
      g = torch.Generator().manual_seed(seed + n)
      total = total + (o * torch.randn(o.shape, generator=g, dtype=o.dtype)).sum()
    return total

  params = [p for p in fragment.parameters() if p.requires_grad]
  fragment.zero_grad()
  scalar(fragment(*inputs)).backward()
  analytic = [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for p in params]

  worst = 0.0
  with torch.no_grad():
    for p, a in zip(params, analytic):
      flat = p.view(-1)
      ga = a.view(-1)
      for k in range(flat.numel()):
        orig = flat[k].item()
        flat[k] = orig + epsilon
        fp = float(scalar(fragment(*inputs)))
        flat[k] = orig - epsilon
        fm = float(scalar(fragment(*inputs)))
        flat[k] = orig
        numeric = (fp - fm) / (2.0 * epsilon)
        err = abs(numeric - ga[k].item()) / max(abs(numeric), abs(ga[k].item()), floor)
        worst = max(worst, err)
  logging.debug('grad_check max relative error {:.3e} over {} parameters'.format(worst, sum(p.numel() for p in params)))
  return worst

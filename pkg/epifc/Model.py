# -*- coding: utf-8 -*-

import os
import math
import logging
import itertools
from dataclasses import dataclass, asdict
import numpy as np
import torch
from epifc.Errors import LengthError, RangeError

CHECKPOINT_VERSION = 1
HYPER_VALUES = {'epochs': (600, 1200, 1800), 'hidden': (16, 32), 'rate': (0.001, 0.005, 0.01)}
DEGENERATE_TOL = 1e-9

def numparameters(model):
  npars = 0 #pars
  nbytes = 0 #bytes
  for name, param in model.named_parameters():
    if param.requires_grad: #learnable parameters only
      npars += param.numel()
      nbytes += param.numel() * param.data.element_size()
      logging.debug("{} => {} = {} x {} bytes".format(name, list(param.data.size()), param.data.numel(), param.data.element_size()))
  name = ("B", "KB", "MB", "GB")
  i = 0 if nbytes == 0 else min(int(math.floor(math.log(nbytes, 1024))), len(name) - 1)
  size = "{:.2f}{}".format(nbytes / math.pow(1024, i), name[i])
  return npars, size

##############################################################################################################
### Hyper settings ###########################################################################################
##############################################################################################################

@dataclass(frozen=True)
class ActsHyper:
  epochs: int = 600
  hidden: int = 16
  rate: float = 0.005
  seg_len: int = 14
  horizon: int = 7
  kernel: int = 3

  def __post_init__(self):
    if self.epochs < 0 or self.hidden < 1 or self.rate < 0:
      raise RangeError('bad ACTS hyper settings {}'.format(self))
    assert self.seg_len >= 2, 'segment length must be >= 2'
    assert self.horizon >= 1, 'horizon must be >= 1'
    assert self.kernel % 2 == 1, 'kernel width must be odd'

  def key(self):
    return (self.epochs, self.hidden, self.rate)

  def as_dict(self):
    return asdict(self)

def hyper_space(horizon=7, seg_len=14, max_epochs=None):
  ### max_epochs caps the epoch values (reduced desk-scale grids keep only epochs <= cap)
  epochs = [e for e in HYPER_VALUES['epochs'] if max_epochs is None or e <= max_epochs] or [min(HYPER_VALUES['epochs'])]
  return [ActsHyper(e, d, r, seg_len, horizon) for e, d, r in itertools.product(epochs, HYPER_VALUES['hidden'], HYPER_VALUES['rate'])]

##############################################################################################################
### RegionBatch ##############################################################################################
##############################################################################################################

@dataclass(frozen=True, eq=False)
class RegionBatch:
  names: tuple
  values: torch.Tensor  ### [N, T] right-aligned, zero-padded on the left
  start: torch.Tensor   ### [N] index of the first observed value of each region
  end_date: object = None

  def __len__(self):
    return len(self.names)

  def length(self, i):
    return int(self.values.shape[1] - self.start[i])

  def index(self, name):
    return self.names.index(name)

def region_batch(series, names=None):
  if names is None:
    names = tuple(getattr(s, 'label', str(i)) for i, s in enumerate(series))
  assert len(names) == len(series), 'one name per series'
  ends = set(s.end_date for s in series if hasattr(s, 'end_date'))
  if len(ends) > 1:
    raise RangeError('region series end on different days: {}'.format(sorted(ends)))
  arrays = [s.array() if hasattr(s, 'array') else np.asarray(s, dtype=np.float64) for s in series]
  T = max(len(a) for a in arrays)
  values = torch.zeros(len(arrays), T, dtype=torch.float64)
  start = torch.zeros(len(arrays), dtype=torch.long)
  for i, a in enumerate(arrays):
    values[i, T - len(a):] = torch.as_tensor(a, dtype=torch.float64)
    start[i] = T - len(a)
  return RegionBatch(tuple(names), values, start, ends.pop() if ends else None)

##############################################################################################################
### HoltSmoother #############################################################################################
##############################################################################################################

class HoltSmoother(torch.nn.Module):
  def __init__(self, n_regions, alpha=0.5, beta=0.5):
    super(HoltSmoother, self).__init__()
    self.alpha_raw = torch.nn.Parameter(torch.full((n_regions,), math.log(alpha / (1.0 - alpha)), dtype=torch.float64))
    self.beta_raw = torch.nn.Parameter(torch.full((n_regions,), math.log(beta / (1.0 - beta)), dtype=torch.float64))

  def coefficients(self):
    return torch.sigmoid(self.alpha_raw), torch.sigmoid(self.beta_raw)

  def forward(self, values, start):
    #values is [N, T] right-aligned, start is [N]
    #returns level and trend [N, T] (zero before each region's start)
    N, T = values.shape
    alpha, beta = self.coefficients()
    idx = torch.arange(N)
    y0 = values[idx, start]
    y1 = values[idx, torch.clamp(start + 1, max=T - 1)]
    level = torch.zeros(N, dtype=values.dtype)
    trend = torch.zeros(N, dtype=values.dtype)
    levels, trends = [], []
    for t in range(T):
      y = values[:, t]
      new_level = alpha * y + (1.0 - alpha) * (level + trend)
      new_trend = beta * (new_level - level) + (1.0 - beta) * trend
      first = start == t
      active = start < t
      level = torch.where(first, y0, torch.where(active, new_level, level))
      trend = torch.where(first, y1 - y0, torch.where(active, new_trend, trend))
      levels.append(level)
      trends.append(trend)
    return torch.stack(levels, dim=1), torch.stack(trends, dim=1)

def extrapolate(level, trend, H):
  ### level_t + k*trend_t for k = 1..H, broadcast over the leading dims
  k = torch.arange(1, H + 1, dtype=level.dtype)
  return level.unsqueeze(-1) + k * trend.unsqueeze(-1)

def detrend(holt, batch, H):
  level, trend = holt(batch.values, batch.start)
  observed = torch.arange(batch.values.shape[1]).unsqueeze(0) >= batch.start.unsqueeze(1)
  residual = torch.where(observed, batch.values - level, torch.zeros_like(level))
  return residual, level, trend, extrapolate(level[:, -1], trend[:, -1], H)

##############################################################################################################
### SegmentSet ###############################################################################################
##############################################################################################################

@dataclass(frozen=True, eq=False)
class SegmentSet:
  region: torch.Tensor      ### [M] region index of every (i, t) in Omega
  t: torch.Tensor           ### [M] segment end index
  seg: torch.Tensor         ### [M, l] anchor-normalized residual segments
  dev: torch.Tensor         ### [M, H] anchor-normalized developments
  first: torch.Tensor       ### [M]
  last: torch.Tensor        ### [M]
  degenerate: torch.Tensor  ### [M] bool
  extrap: torch.Tensor      ### [M, H] Holt extrapolation at t
  truth: torch.Tensor       ### [M, H] observed values at t+1..t+H
  q_seg: torch.Tensor       ### [N, l] last segment of every region (ends at T)
  q_first: torch.Tensor
  q_last: torch.Tensor
  q_degenerate: torch.Tensor
  q_extrap: torch.Tensor    ### [N, H]

  def __len__(self):
    return int(self.region.shape[0])

def anchors(seg):
  first, last = seg[..., 0], seg[..., -1]
  rng = last - first
  degenerate = torch.abs(rng) <= DEGENERATE_TOL * torch.clamp(torch.abs(first), min=1.0)
  safe = torch.where(degenerate, torch.ones_like(rng), rng)
  return first, last, degenerate, safe

def normalize(x, first, safe, degenerate):
  z = (x - first.unsqueeze(-1)) / safe.unsqueeze(-1)
  return torch.where(degenerate.unsqueeze(-1), torch.zeros_like(z), z)

def denormalize(z, first, last):
  return first.unsqueeze(-1) + z * (last - first).unsqueeze(-1)

def build_segments(batch, residual, level, trend, l, H):
  N, T = batch.values.shape
  for i in range(N):
    if batch.length(i) < l + H:
      raise LengthError('region {} has {} values, segments need >= l+H = {}'.format(batch.names[i], batch.length(i), l + H))
  nt = T - l - H + 1
  ts = torch.arange(l - 1, l - 1 + nt) #segment end indices
  segs = residual.unfold(1, l, 1)[:, :nt] #[N, nt, l]
  truth = batch.values.unfold(1, H, 1)[:, l:l + nt] #[N, nt, H] starting at t+1
  extrap = extrapolate(level[:, ts], trend[:, ts], H) #[N, nt, H]
  valid = (ts.unsqueeze(0) - l + 1) >= batch.start.unsqueeze(1) #[N, nt]
  region = torch.arange(N).unsqueeze(1).expand(N, nt)[valid]
  t = ts.unsqueeze(0).expand(N, nt)[valid]
  seg, truth, extrap = segs[valid], truth[valid], extrap[valid]
  first, last, degenerate, safe = anchors(seg)
  z_seg = normalize(seg, first, safe, degenerate)
  z_dev = normalize(truth - extrap, first, safe, degenerate)

  q = residual[:, T - l:]
  q_first, q_last, q_degenerate, q_safe = anchors(q)
  q_extrap = extrapolate(level[:, -1], trend[:, -1], H)
  return SegmentSet(region, t, z_seg, z_dev, first, last, degenerate, extrap, truth, normalize(q, q_first, q_safe, q_degenerate), q_first, q_last, q_degenerate, q_extrap)

##############################################################################################################
### Embeddings / Attention ###################################################################################
##############################################################################################################

class ConvEmbedding(torch.nn.Module):
  ### conv1d (same padding) -> relu -> average pooling over time
  def __init__(self, hidden, kernel=3):
    super(ConvEmbedding, self).__init__()
    self.conv = torch.nn.Conv1d(1, hidden, kernel, stride=1, padding=kernel // 2)

  def forward(self, x):
    #x is [M, L]
    z = torch.relu(self.conv(x.unsqueeze(1))) #[M, d, L]
    return z.mean(dim=-1) #[M, d]

class InterSeriesAttention(torch.nn.Module):
  def __init__(self, hidden):
    super(InterSeriesAttention, self).__init__()
    self.WQ = torch.nn.Linear(hidden, hidden, bias=False)
    self.WK = torch.nn.Linear(hidden, hidden, bias=False)
    self.WV = torch.nn.Linear(hidden, hidden, bias=False)

  def forward(self, p_q, p_k, g_k, msk=None):
    #p_q is [Mq, d] query segment embeddings
    #p_k is [Mk, d] key segment embeddings, g_k is [Mk, d] their development embeddings
    #msk is [Mq, Mk] (False where the key is not allowed)
    Q = self.WQ(p_q)
    K = self.WK(p_k)
    V = self.WV(g_k)
    s = torch.matmul(Q, K.transpose(0, 1)) #[Mq, Mk] unscaled dot products
    if msk is None:
      msk = torch.ones_like(s, dtype=torch.bool)
    has_key = msk.any(dim=-1, keepdim=True) #[Mq, 1]
    s = s.masked_fill(~msk, float('-inf'))
    s = torch.where(has_key, s, torch.zeros_like(s))
    w = torch.softmax(s, dim=-1) * has_key #rows without keys attend to nothing
    return torch.matmul(w, V), w #[Mq, d], [Mq, Mk]

##############################################################################################################
### ActsModel ################################################################################################
##############################################################################################################

class ActsModel(torch.nn.Module):
  def __init__(self, regions, hyper):
    super(ActsModel, self).__init__()
    self.regions = tuple(regions)
    self.hyper = hyper
    self.holt = HoltSmoother(len(self.regions))
    self.conv_seg = ConvEmbedding(hyper.hidden, hyper.kernel)
    self.conv_dev = ConvEmbedding(hyper.hidden, hyper.kernel)
    self.attn = InterSeriesAttention(hyper.hidden)
    self.out_proj = torch.nn.Linear(hyper.hidden, hyper.horizon)
    self.register_buffer('trained', torch.tensor(False))
    self.double()

  def segments(self, batch):
    assert batch.names == self.regions, 'batch regions {} != model regions {}'.format(batch.names, self.regions)
    residual, level, trend, _ = detrend(self.holt, batch, self.hyper.horizon)
    return build_segments(batch, residual, level, trend, self.hyper.seg_len, self.hyper.horizon)

  def keys(self, segs):
    return self.conv_seg(segs.seg), self.conv_dev(segs.dev)

  def forward(self, batch):
    ### predictions for every (i, t) in Omega; returns pred, truth [M, H]
    segs = self.segments(batch)
    p, g = self.keys(segs)
    H = self.hyper.horizon
    msk = (torch.abs(segs.t.unsqueeze(1) - segs.t.unsqueeze(0)) >= H) & ~segs.degenerate.unsqueeze(0)
    v, _ = self.attn(p, p, g, msk)
    pred = segs.extrap + denormalize(self.out_proj(v), segs.first, segs.last)
    return pred, segs.truth, segs

  def query(self, batch, segs=None):
    ### attention output for the last segment of every region; all Omega keys lie in the past
    if segs is None:
      segs = self.segments(batch)
    p, g = self.keys(segs)
    p_q = self.conv_seg(segs.q_seg)
    msk = ~segs.degenerate.unsqueeze(0).expand(p_q.shape[0], -1)
    return self.attn(p_q, p, g, msk)

  def predict(self, batch):
    segs = self.segments(batch)
    v, _ = self.query(batch, segs)
    return segs.q_extrap + denormalize(self.out_proj(v), segs.q_first, segs.q_last) #[N, H]

##############################################################################################################
### Checkpoints ##############################################################################################
##############################################################################################################

def save_checkpoint(fname, model, optimizer=None, epoch=0):
  dname = os.path.dirname(fname)
  if dname:
    os.makedirs(dname, exist_ok=True)
  checkpoint = {'version': CHECKPOINT_VERSION, 'epoch': epoch, 'regions': list(model.regions), 'hyper': model.hyper.as_dict(), 'model': model.state_dict(), 'optimizer': optimizer.state_dict() if optimizer is not None else None}
  torch.save(checkpoint, fname)
  logging.info('Saved {} (epoch={})'.format(fname, epoch))

def load_checkpoint(fname):
  if not os.path.isfile(fname):
    raise FileNotFoundError('no checkpoint {}'.format(fname))
  checkpoint = torch.load(fname, map_location='cpu')
  if checkpoint.get('version') != CHECKPOINT_VERSION:
    raise RangeError('unsupported checkpoint version {} in {}'.format(checkpoint.get('version'), fname))
  model = ActsModel(checkpoint['regions'], ActsHyper(**checkpoint['hyper']))
  model.load_state_dict(checkpoint['model'])
  logging.info('Loaded model epoch={} from {}'.format(checkpoint['epoch'], fname))
  return model, checkpoint['epoch'], checkpoint['optimizer']

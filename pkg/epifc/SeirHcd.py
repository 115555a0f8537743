# -*- coding: utf-8 -*-

import logging
import itertools
import concurrent.futures
from dataclasses import dataclass, astuple
import numpy as np
import scipy.optimize
from epifc.Errors import RangeError, LengthError, FitError
from epifc.Preprocessing import as_array

PARAM_NAMES = ('R0', 't_inf', 't_inc', 't_hosp', 't_crt', 'beta', 'gamma', 'delta')
COMPARTMENTS = ('S', 'E', 'I', 'R', 'H', 'C', 'D')
PARAM_GRID = {
  'R0': (1.2, 3.6, 7.0),
  't_inf': (2.9, 6.2, 10.1),
  't_inc': (4.0, 7.0, 14.0),
  't_hosp': (4.0, 12.0),
  't_crt': (5.0, 14.0),
  'beta': (0.7, 0.9),
  'gamma': (0.1, 0.6),
  'delta': (0.3, 0.8),
}
BOUNDS = tuple((min(PARAM_GRID[k]), max(PARAM_GRID[k])) for k in PARAM_NAMES)
STEP = 0.1
WINDOW = 21
FD_STEP = 1e-6
MAXITER = 200

##############################################################################################################
### Parameters / state #######################################################################################
##############################################################################################################

@dataclass(frozen=True)
class SeirHcdParams:
  R0: float
  t_inf: float
  t_inc: float
  t_hosp: float
  t_crt: float
  beta: float
  gamma: float
  delta: float

  def __post_init__(self):
    for name, (lo, hi) in zip(PARAM_NAMES, BOUNDS):
      v = getattr(self, name)
      if not (lo - 1e-9 <= v <= hi + 1e-9):
        raise RangeError('{}={} outside [{}, {}]'.format(name, v, lo, hi))

  def array(self):
    return np.array(astuple(self), dtype=np.float64)

  @classmethod
  def from_array(cls, x):
    return cls(*(float(v) for v in x))

  def as_dict(self):
    return dict(zip(PARAM_NAMES, astuple(self)))

@dataclass(frozen=True)
class CompartmentState:
  S: float
  E: float
  I: float
  R: float
  H: float
  C: float
  D: float

  def array(self):
    return np.array(astuple(self), dtype=np.float64)

  @classmethod
  def from_array(cls, x):
    return cls(*(float(v) for v in x))

  def total(self):
    return float(sum(astuple(self)))

def initial_state(N, n_inf=1):
  assert N > 0 and 0 < n_inf <= N, 'bad population {} / initial infected {}'.format(N, n_inf)
  return CompartmentState((N - n_inf) / N, 0.0, n_inf / N, 0.0, 0.0, 0.0, 0.0)

##############################################################################################################
### Dynamics #################################################################################################
##############################################################################################################

def _rates(y, P):
  ### y is [7, B] compartments, P is [8, B] parameters (PARAM_NAMES order)
  S, E, I, R, H, C, D = y
  R0, t_inf, t_inc, t_hosp, t_crt, beta, gamma, delta = P
  infection = R0 * I * S / t_inf
  incubated = E / t_inc
  infectious_out = I / t_inf
  hosp_out = H / t_hosp
  crt_out = C / t_crt
  return np.stack([
    -infection,
    infection - incubated,
    incubated - infectious_out,
    beta * infectious_out + (1.0 - gamma) * hosp_out,
    (1.0 - beta) * infectious_out + (1.0 - delta) * crt_out - hosp_out,
    gamma * hosp_out - crt_out,
    delta * crt_out,
  ])

def derivative(state, params):
  y = state.array()[:, None]
  P = params.array()[:, None]
  return CompartmentState.from_array(_rates(y, P)[:, 0])

def substeps(step):
  if step <= 0:
    raise RangeError('integration step must be positive, got {}'.format(step))
  n = int(round(1.0 / step))
  if n < 1 or abs(n * step - 1.0) > 1e-9:
    raise RangeError('integration step {} does not divide one day'.format(step))
  return n

def integrate(y0, P, days, step=STEP):
  ### batched RK4: y0 is [7, B], P is [8, B]; returns [days+1, 7, B] daily samples (t=0 included)
  n = substeps(step)
  h = 1.0 / n
  y = np.array(y0, dtype=np.float64)
  out = np.empty((days + 1,) + y.shape)
  out[0] = y
  for day in range(1, days + 1):
    for _ in range(n):
      k1 = _rates(y, P)
      k2 = _rates(y + 0.5 * h * k1, P)
      k3 = _rates(y + 0.5 * h * k2, P)
      k4 = _rates(y + h * k3, P)
      y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[day] = y
  return out

def simulate(params, init, days, step=STEP):
  if days < 1:
    raise RangeError('simulate needs days >= 1, got {}'.format(days))
  traj = integrate(init.array()[:, None], params.array()[:, None], days, step)
  return [CompartmentState.from_array(y[:, 0]) for y in traj]

def _trajectory_array(trajectory):
  if len(trajectory) == 0:
    raise LengthError('empty trajectory')
  if isinstance(trajectory, np.ndarray):
    return trajectory
  return np.array([s.array() for s in trajectory])

def observe(trajectory, N):
  ### confirmed counts everyone who ever left E: I+R+H+C+D
  y = _trajectory_array(trajectory)
  confirmed = N * y[:, 2:7].sum(axis=1)
  deaths = N * y[:, 6]
  return confirmed, deaths

##############################################################################################################
### Calibration ##############################################################################################
##############################################################################################################

def ramp_weights(window=WINDOW):
  w = np.arange(1, window + 1, dtype=np.float64)
  return w / w.sum()

@dataclass(frozen=True)
class FitContext:
  N: int
  n_inf: int = 1
  window: int = WINDOW
  weights: tuple = None

  def __post_init__(self):
    assert self.N > 0, 'population must be positive'
    assert self.n_inf >= 1, 'initial infected must be >= 1'
    w = ramp_weights(self.window) if self.weights is None else np.asarray(self.weights, dtype=np.float64)
    if len(w) != self.window:
      raise LengthError('{} weights for a {}-day window'.format(len(w), self.window))
    if np.any(w < 0) or np.any(np.diff(w) < 0) or w.sum() <= 0:
      raise RangeError('weights must be non-negative and non-decreasing')
    object.__setattr__(self, 'weights', tuple(float(v) for v in w / w.sum()))

def fit_loss(pred_conf, pred_death, obs_conf, obs_death, weights):
  ### weighted mean squared log error, both targets averaged; pred arrays may carry a trailing batch axis
  w = np.asarray(weights, dtype=np.float64)
  obs_c = np.log1p(np.asarray(obs_conf, dtype=np.float64))
  obs_d = np.log1p(np.asarray(obs_death, dtype=np.float64))
  pc = np.log1p(np.maximum(np.asarray(pred_conf, dtype=np.float64), 0.0))
  pdeath = np.log1p(np.maximum(np.asarray(pred_death, dtype=np.float64), 0.0))
  if pc.ndim > 1:
    obs_c, obs_d, w = obs_c[:, None], obs_d[:, None], w[:, None]
  return 0.5 * np.sum(w * ((pc - obs_c) ** 2 + (pdeath - obs_d) ** 2), axis=0)

@dataclass(frozen=True)
class SeirHcdFit:
  params: SeirHcdParams
  loss: float
  final_state: CompartmentState
  converged: bool
  N: int = 0
  starts: int = 0

def start_grid(max_starts=None):
  grid = [SeirHcdParams(*vals) for vals in itertools.product(*(PARAM_GRID[k] for k in PARAM_NAMES))]
  if max_starts is None or max_starts >= len(grid):
    return grid
  assert max_starts >= 1, 'max_starts must be >= 1'
  idx = sorted(set(np.linspace(0, len(grid) - 1, max_starts).round().astype(int).tolist()))
  return [grid[i] for i in idx]

class _Objective():
  def __init__(self, obs_conf, obs_death, ctx, step):
    self.obs_conf = obs_conf[-ctx.window:]
    self.obs_death = obs_death[-ctx.window:]
    self.days = len(obs_conf) - 1
    self.ctx = ctx
    self.step = step
    self.y0 = initial_state(ctx.N, ctx.n_inf).array()
    self.lo = np.array([b[0] for b in BOUNDS])
    self.hi = np.array([b[1] for b in BOUNDS])

  def losses(self, P):
    ### P is [8, B]; one batched simulation, loss per column
    B = P.shape[1]
    traj = integrate(np.repeat(self.y0[:, None], B, axis=1), P, self.days, self.step)[-self.ctx.window:] #[window, 7, B]
    conf = self.ctx.N * traj[:, 2:7, :].sum(axis=1)
    death = self.ctx.N * traj[:, 6, :]
    return fit_loss(conf, death, self.obs_conf, self.obs_death, self.ctx.weights)

  def __call__(self, x):
    ### loss and forward-difference gradient (backward at the upper bound) from one batch of 9 parameter sets
    x = np.clip(x, self.lo, self.hi)
    h = FD_STEP * np.maximum(np.abs(x), 1.0)
    h = np.where(x + h > self.hi, -h, h)
    P = np.repeat(x[:, None], len(x) + 1, axis=1)
    P[np.arange(len(x)), np.arange(1, len(x) + 1)] += h
    L = self.losses(P)
    grad = (L[1:] - L[0]) / h
    return float(L[0]), grad

def _run_start(args):
  objective, x0 = args
  f0, _ = objective(x0)
  try:
    res = scipy.optimize.minimize(objective, x0, jac=True, method='L-BFGS-B', bounds=BOUNDS, options={'maxiter': MAXITER})
    x, f, ok = np.clip(res.x, objective.lo, objective.hi), float(res.fun), bool(res.success)
  except (ValueError, FloatingPointError) as e:
    logging.debug('SEIR-HCD start failed: {}'.format(e))
    x, f, ok = x0, float('nan'), False
  if not np.isfinite(f) or (np.isfinite(f0) and f > f0):
    x, f, ok = x0, f0, False ### never worse than the start
  return x, f, ok

def fit(observed_conf, observed_death, ctx, init_grid=None, step=STEP, jobs=1):
  if len(observed_conf) != len(observed_death):
    raise LengthError('confirmed/death lengths differ ({} != {})'.format(len(observed_conf), len(observed_death)))
  if hasattr(observed_conf, 'end_date') and hasattr(observed_death, 'end_date') and observed_conf.end_date != observed_death.end_date:
    raise RangeError('confirmed/death series end on different days')
  obs_conf, obs_death = as_array(observed_conf), as_array(observed_death)
  if len(obs_conf) < ctx.window:
    raise LengthError('SEIR-HCD fit needs >= {} days, got {}'.format(ctx.window, len(obs_conf)))
  starts = start_grid() if init_grid is None else list(init_grid)
  assert len(starts) > 0, 'empty multistart grid'
  objective = _Objective(obs_conf, obs_death, ctx, step)
  logging.info('SEIR-HCD fit: N={} days={} starts={}'.format(ctx.N, len(obs_conf), len(starts)))

  args = [(objective, p.array()) for p in starts]
  if jobs > 1:
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      results = list(pool.map(_run_start, args))
  else:
    results = [_run_start(a) for a in args]

  finite = [r for r in results if np.isfinite(r[1])]
  if len(finite) == 0:
    raise FitError('every SEIR-HCD start diverged ({} starts)'.format(len(starts)))
  ### converged starts first, any finite start only when none converged
  candidates = [r for r in finite if r[2]] or finite
  x, loss, converged = min(candidates, key=lambda r: (r[1], tuple(r[0])))
  params = SeirHcdParams.from_array(x)
  final = integrate(objective.y0[:, None], x[:, None], objective.days, step)[-1, :, 0]
  logging.info('SEIR-HCD fit done: loss={:.6f} converged={} {}'.format(loss, converged, ' '.join('{}={:.3f}'.format(k, v) for k, v in params.as_dict().items())))
  if not converged:
    logging.warning('SEIR-HCD best start did not converge')
  return SeirHcdFit(params, loss, CompartmentState.from_array(final), converged, ctx.N, len(starts))

def forecast(params, final_state, N, h, step=STEP):
  assert h >= 1, 'horizon must be >= 1'
  traj = integrate(final_state.array()[:, None], params.array()[:, None], h, step)
  conf, death = observe(traj[:, :, 0], N)
  return np.maximum(np.diff(conf), 0.0), np.maximum(np.diff(death), 0.0)

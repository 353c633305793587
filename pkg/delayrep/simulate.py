"""
Time-domain simulation of every representation, and trajectory comparison.

DDE, NDS, DDF and ODE-PDE runs use classical RK4 on a uniform grid. Past
values come from a buffer of grid samples read through local cubic
interpolation; values at t <= 0 come from the initial history. Distributed
delay integrals use Gauss–Legendre panels aligned to the buffer and history
knots. PIE runs discretize every operator on Chebyshev nodes and step with
the implicit trapezoid rule.
"""
import logging
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from .conf import get_setting, resolve
from .convert import odepde_history_to_ddf
from .exceptions import (
    DimensionError, DiscretizationError, DivergenceError, SewingError, UsageError,
)
from .inputs import HistoryFunction, SignalDescriptor
from .piops import Collocation, HybridVector, discretize
from .quadrature import panel_count, panel_nodes
from .specs import DDESpec, DDFSpec, NDSSpec, ODEPDESpec, PIESpec
from .validation import (
    check_inputs, check_sewing_ddf, check_sewing_odepde, ensure_valid, max_residual,
)

logger = logging.getLogger(__name__)

INTEGRATORS = ('rk4-characteristics', 'implicit-trapezoid')
DERIVATIVE_MODES = ('analytic', 'finite-difference')


@dataclass(frozen=True)
class SimConfig:
    dt: float = None
    t_final: float = 1.0
    order: int = None
    integrator: str = 'rk4-characteristics'
    derivative_mode: str = 'analytic'

    def __post_init__(self):
        object.__setattr__(self, 'dt', float(resolve(self.dt, 'DEFAULT_DT')))
        object.__setattr__(self, 'order', int(resolve(self.order, 'DEFAULT_ORDER')))
        object.__setattr__(self, 't_final', float(self.t_final))
        if not self.dt > 0:
            raise UsageError(f'dt must be positive, got {self.dt}')
        if self.t_final < self.dt:
            raise UsageError(f't_final={self.t_final} is shorter than one step dt={self.dt}')
        if self.integrator not in INTEGRATORS:
            raise UsageError(f'unknown integrator {self.integrator!r}')
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise UsageError(f'unknown derivative mode {self.derivative_mode!r}')

    @property
    def steps(self):
        return int(round(self.t_final / self.dt))

    def times(self):
        return self.dt * np.arange(self.steps + 1)

    def check_delays(self, delays):
        if len(delays) and self.dt > min(delays) / 4.0 * (1.0 + 1e-12):
            raise UsageError(f'dt={self.dt} exceeds min delay / 4 = {min(delays) / 4.0}')


def _frozen(array):
    if array is None:
        return None
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Signals sampled on a uniform time grid. Rows are time steps."""
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    v: np.ndarray = None
    w: np.ndarray = None
    u: np.ndarray = None
    channels: MappingProxyType = field(default_factory=dict)
    nodes: np.ndarray = None
    state: np.ndarray = None
    kind: str = ''

    def __post_init__(self):
        for name in ('t', 'x', 'y', 'z', 'v', 'w', 'u', 'nodes', 'state'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(
            self, 'channels', MappingProxyType({k: _frozen(v) for k, v in dict(self.channels).items()}))
        steps = self.t.shape[0]
        if steps > 2 and not np.allclose(np.diff(self.t), self.t[1] - self.t[0], rtol=1e-9, atol=1e-12):
            raise DimensionError('trajectory time grid is not uniform')
        for name in ('x', 'y', 'z', 'v', 'w', 'u', 'state'):
            value = getattr(self, name)
            if value is None:
                continue
            if value.shape[0] != steps:
                raise DimensionError(f'{name} has {value.shape[0]} samples for {steps} times')
            if not np.all(np.isfinite(value)):
                raise DimensionError(f'{name} has non-finite samples')

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def signal(self, name):
        if name in ('x', 'y', 'z', 'v', 'w', 'u'):
            value = getattr(self, name)
        else:
            value = self.channels.get(name)
        if value is None:
            raise UsageError(f'trajectory has no signal {name!r}')
        return value.reshape(value.shape[0], -1)


# history buffer


def _lagrange_weights(x, npts):
    """Lagrange basis on the integer nodes 0..npts-1, evaluated at x (shape (L,))."""
    W = np.ones((x.size, npts))
    for j in range(npts):
        for i in range(npts):
            if i != j:
                W[:, j] *= (x - i) / (j - i)
    return W


class SignalBuffer:
    """Grid samples of one vector signal, with its initial history for t <= 0."""

    def __init__(self, dim, dt, steps, history=None):
        self.dim = dim
        self.dt = dt
        self.values = np.zeros((steps + 1, dim))
        self.count = 0
        self.history = history
        if history is not None and history.dim != dim:
            raise DimensionError(f'history has dimension {history.dim}, expected {dim}')

    def push(self, value):
        self.values[self.count] = value
        self.count += 1

    @property
    def samples(self):
        return self.values[:self.count]

    def _recent(self, t):
        last = self.count - 1
        if last < 0:
            raise DimensionError('signal buffer is empty')
        npts = min(4, last + 1)
        xi = t / self.dt
        interval = np.minimum(np.floor(xi).astype(int), last)
        base = np.clip(interval - 1, 0, last - npts + 1)
        W = _lagrange_weights(xi - base, npts)
        idx = base[:, None] + np.arange(npts)[None, :]
        return np.einsum('lj,ljd->ld', W, self.values[idx])

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.size, self.dim))
        past = t <= 0.0
        if self.history is not None and past.any():
            out[past] = self.history(t[past]).reshape(-1, self.dim)
        if (~past).any():
            out[~past] = self._recent(t[~past])
        return out

    def breaks(self, lo, hi):
        points = [lo, hi]
        if lo < 0.0:
            if self.history is not None:
                grid = self.history.grid
                points.extend(grid[(grid > lo) & (grid < min(hi, 0.0))])
            if hi > 0.0:
                points.append(0.0)
        if hi > 0.0:
            first = max(int(np.ceil(max(lo, 0.0) / self.dt)), 0)
            last = int(np.floor(hi / self.dt))
            points.extend(self.dt * np.arange(first, last + 1))
        points = np.unique(np.clip(points, lo, hi))
        return points

    def integral(self, kernel, t, tau, panel_setting=None):
        """int_{-tau}^0 kernel(s) @ signal(t + s) ds"""
        br = self.breaks(t - tau, t)
        npts = panel_count(kernel.effective_degree(), panel_setting)
        points, weights = panel_nodes(br, npts)
        K = kernel.evaluate_many(np.clip(points - t, -tau, 0.0))
        return np.einsum('q,qij,qj->i', weights, K, self(points))


def as_history(x0, dim, lo):
    """A HistoryFunction from a history, a constant vector or a scalar."""
    if isinstance(x0, HistoryFunction):
        if x0.dim != dim:
            raise DimensionError(f'history has dimension {x0.dim}, expected {dim}')
        if x0.lo > lo + 1e-12 * max(1.0, abs(lo)):
            raise DimensionError(f'history covers [{x0.lo}, 0], needs [{lo}, 0]')
        return x0
    value = np.zeros(dim) if x0 is None else np.broadcast_to(np.asarray(x0, dtype=float), (dim,))
    return HistoryFunction.constant(value, lo)


def stacked_history(x0, extra):
    """The history [x0(s); 0] with `extra` zero rows appended, on x0's grid."""
    values = np.hstack([x0.values, np.zeros((x0.values.shape[0], extra))])
    return HistoryFunction(x0.grid, values, channel=x0.channel)


def _input(signal):
    return SignalDescriptor.zero() if signal is None else signal


def _check_finite(x, t):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(f'state became non-finite at t={t:.6g}', time=t)


def _rk4(f, t, x, h, k1):
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# DDE and NDS


class _DelayRunner:
    """RK4 for the DDE and NDS classes over the stacked signal [x; w; u] (plus x' for NDS)."""

    def __init__(self, spec, x0, w, u, cfg):
        self.spec = spec
        self.cfg = cfg
        self.w, self.u = _input(w), _input(u)
        dims = spec.dims
        self.n, self.m, self.p = dims.n, dims.m, dims.p
        self.neutral = isinstance(spec, NDSSpec)
        lo = -spec.max_delay if spec.delays else -1.0
        width = self.n + self.m + self.p + (self.n if self.neutral else 0)
        if self.neutral:
            history = HistoryFunction.zeros(width, lo)
            self.x_init = np.zeros(self.n)
        else:
            x0 = as_history(x0, self.n, lo)
            history = stacked_history(x0, width - self.n)
            self.x_init = x0(0.0).reshape(-1)
        self.buffer = SignalBuffer(width, cfg.dt, cfg.steps, history)
        self.instant = spec.instant_block()
        self.delayed = [spec.delayed_block(i) for i in range(dims.K)]
        self.kernels = [spec.kernel_block(i) for i in range(dims.K)]
        self.panel_setting = get_setting('QUADRATURE_PANEL_NODES')

    def rows(self, t, x):
        """[x'; z; y] at time t for state x."""
        wu = np.concatenate([x, self.w.evaluate(t, self.m), self.u.evaluate(t, self.p)])
        out = self.instant @ wu
        for tau, block, kernel in zip(self.spec.delays, self.delayed, self.kernels):
            out += block @ self.buffer(t - tau)[0]
            if not kernel.is_zero():
                out += self.buffer.integral(kernel, t, tau, self.panel_setting)
        return out

    def _record(self, t, x, rows):
        sample = [x, self.w.evaluate(t, self.m), self.u.evaluate(t, self.p)]
        if self.neutral:
            sample.append(rows[:self.n])
        self.buffer.push(np.concatenate(sample))

    def run(self):
        cfg, n = self.cfg, self.n
        h = cfg.dt
        times = cfg.times()
        outputs = np.zeros((times.size, self.spec.dims.q + self.spec.dims.r))
        xs = np.zeros((times.size, n))

        x = self.x_init.copy()
        rows = self.rows(0.0, x)
        self._record(0.0, x, rows)
        xs[0], outputs[0] = x, rows[n:]
        f = lambda t, state: self.rows(t, state)[:n]  # noqa: E731
        for k in range(cfg.steps):
            t = times[k]
            x = _rk4(f, t, x, h, rows[:n])
            _check_finite(x, times[k + 1])
            rows = self.rows(times[k + 1], x)
            self._record(times[k + 1], x, rows)
            xs[k + 1], outputs[k + 1] = x, rows[n:]

        q = self.spec.dims.q
        return Trajectory(
            t=times, x=xs, z=outputs[:, :q], y=outputs[:, q:],
            w=self.w.samples(times, self.m), u=self.u.samples(times, self.p),
            kind=self.spec.kind,
        )


def simulate_dde(d, x0, w=None, u=None, cfg=None):
    """Integrate a DDE from the initial history x0 on [-tau_K, 0]."""
    cfg = cfg or SimConfig()
    ensure_valid(d)
    cfg.check_delays(d.delays)
    check_inputs(d, _input(w), _input(u))
    logger.info('simulating %s: %d steps of dt=%g to t=%g', d.kind, cfg.steps, cfg.dt, cfg.t_final)
    return _DelayRunner(d, x0, w, u, cfg).run()


def simulate_nds(s, w=None, u=None, cfg=None):
    """Integrate a neutral system under zero initial data (x, w, u vanish for t <= 0)."""
    if not isinstance(s, NDSSpec):
        raise UsageError(f'simulate_nds expects an NDS spec, got {s.kind}')
    return simulate_dde(s, None, w, u, cfg)


# DDF and ODE-PDE


class _ChannelRunner:
    """RK4 for the DDF class; each channel r_i keeps its own buffer."""

    def __init__(self, spec, x0, r0, w, u, cfg):
        self.spec = spec
        self.cfg = cfg
        self.w, self.u = _input(w), _input(u)
        dims = spec.dims
        self.dims = dims
        mats = spec.matrices
        self.A0, self.B1, self.B2, self.Bv = mats['A0'], mats['B1'], mats['B2'], mats['Bv']
        self.out = np.block([
            [mats['C1'], mats['D11'], mats['D12'], mats['D1v']],
            [mats['C2'], mats['D21'], mats['D22'], mats['D2v']],
        ])
        self.x_init = np.broadcast_to(np.asarray(x0 if x0 is not None else 0.0, dtype=float),
                                      (dims.n,)).copy()
        self.buffers = [
            SignalBuffer(pi, cfg.dt, cfg.steps, h) for pi, h in zip(dims.channel_dims, r0)
        ]
        self.panel_setting = get_setting('QUADRATURE_PANEL_NODES')

    def v(self, t):
        out = np.zeros(self.dims.nv)
        for i, (tau, buf) in enumerate(zip(self.spec.delays, self.buffers)):
            out += self.spec.channels[i]['Cv'] @ buf(t - tau)[0]
            kernel = self.spec.kernels[i]
            if not kernel.is_zero():
                out += buf.integral(kernel, t, tau, self.panel_setting)
        return out

    def rhs(self, t, x, v):
        w, u = self.w.evaluate(t, self.dims.m), self.u.evaluate(t, self.dims.p)
        return self.A0 @ x + self.B1 @ w + self.B2 @ u + self.Bv @ v

    def _record(self, t, x, v):
        w, u = self.w.evaluate(t, self.dims.m), self.u.evaluate(t, self.dims.p)
        for i, buf in enumerate(self.buffers):
            c = self.spec.channels[i]
            buf.push(c['Cr'] @ x + c['Br1'] @ w + c['Br2'] @ u + c['Drv'] @ v)
        return self.out @ np.concatenate([x, w, u, v])

    def run(self):
        cfg, dims = self.cfg, self.dims
        h = cfg.dt
        times = cfg.times()
        xs = np.zeros((times.size, dims.n))
        vs = np.zeros((times.size, dims.nv))
        outputs = np.zeros((times.size, dims.q + dims.r))

        x = self.x_init.copy()
        v = self.v(0.0)
        outputs[0] = self._record(0.0, x, v)
        xs[0], vs[0] = x, v
        f = lambda t, state: self.rhs(t, state, self.v(t))  # noqa: E731
        for k in range(cfg.steps):
            x = _rk4(f, times[k], x, h, self.rhs(times[k], x, v))
            _check_finite(x, times[k + 1])
            v = self.v(times[k + 1])
            outputs[k + 1] = self._record(times[k + 1], x, v)
            xs[k + 1], vs[k + 1] = x, v

        logger.debug('channel buffers: %s', [buf.count for buf in self.buffers])
        q = dims.q
        return Trajectory(
            t=times, x=xs, z=outputs[:, :q], y=outputs[:, q:], v=vs,
            w=self.w.samples(times, dims.m), u=self.u.samples(times, dims.p),
            channels={f'r{i + 1}': buf.samples for i, buf in enumerate(self.buffers)},
            kind=self.spec.kind,
        )


def _channel_histories(spec, histories, lo_of):
    if histories is None:
        histories = [None] * spec.dims.K
    if len(histories) != spec.dims.K:
        raise DimensionError(f'{len(histories)} histories for K={spec.dims.K} channels')
    return [
        as_history(h, pi, lo_of(tau))
        for h, pi, tau in zip(histories, spec.dims.channel_dims, spec.delays)
    ]


def constant_histories(spec, x0, lo=None):
    """Constant channel histories r_i0 = C_ri x0 + D_rvi v0 that satisfy the sewing condition.

    v0 solves v0 = sum_i hat(C_vi) r_i0 with zero inputs. `lo` defaults to -tau_i per
    channel; pass -1.0 for ODE-PDE histories.
    """
    x0 = np.broadcast_to(np.asarray(0.0 if x0 is None else x0, dtype=float), (spec.dims.n,))
    drive = np.zeros(spec.dims.nv)
    for i in range(spec.dims.K):
        drive += spec.hat_Cv(i) @ spec.channels[i]['Cr'] @ x0
    v0 = scipy.linalg.solve(spec.loop_matrix(), drive) if spec.dims.nv else drive
    return [
        HistoryFunction.constant(c['Cr'] @ x0 + c['Drv'] @ v0, -tau if lo is None else lo, channel=i)
        for i, (c, tau) in enumerate(zip(spec.channels, spec.delays))
    ]


def _check_sewing(residuals, label):
    tol = get_setting('SEWING_TOLERANCE')
    worst = max_residual(residuals)
    if worst > tol:
        raise SewingError(f'{label} sewing residual {worst:.3g} exceeds {tol:.3g}', residuals)


def _run_channels(spec, x0, r0, w, u, cfg):
    cfg = cfg or SimConfig()
    ensure_valid(spec)
    cfg.check_delays(spec.delays)
    check_inputs(spec, _input(w), _input(u))
    logger.info('simulating %s: %d steps of dt=%g to t=%g, sum p_i = %d',
                spec.kind, cfg.steps, cfg.dt, cfg.t_final, spec.dims.total_channel_dim)
    runner = _ChannelRunner(spec, x0, r0, w, u, cfg)
    return runner, runner.run()


def simulate_ddf(d, x0=None, r0=None, w=None, u=None, cfg=None):
    """Integrate a DDF from x0 and channel histories r0 (zero when omitted)."""
    ensure_valid(d)
    r0 = _channel_histories(d, r0, lambda tau: -tau)
    x0 = np.broadcast_to(np.asarray(0.0 if x0 is None else x0, dtype=float), (d.dims.n,))
    _check_sewing(check_sewing_ddf(d, x0, r0), 'DDF')
    return _run_channels(d, x0, r0, w, u, cfg)[1]


def simulate_odepde(o, x0=None, phi0=None, w=None, u=None, cfg=None):
    """Integrate an ODE-PDE by characteristics: phi_i(t, s) = r_i(t + tau_i s)."""
    if not isinstance(o, ODEPDESpec):
        raise UsageError(f'simulate_odepde expects an ODEPDE spec, got {o.kind}')
    ensure_valid(o)
    cfg = cfg or SimConfig()
    phi0 = _channel_histories(o, phi0, lambda tau: -1.0)
    x0 = np.broadcast_to(np.asarray(0.0 if x0 is None else x0, dtype=float), (o.dims.n,))
    _check_sewing(check_sewing_odepde(o, x0, phi0), 'ODE-PDE')
    r0 = [odepde_history_to_ddf(h, tau) for h, tau in zip(phi0, o.delays)]
    runner, traj = _run_channels(o, x0, r0, w, u, cfg)

    nodes = Collocation(cfg.order).nodes
    channels = dict(traj.channels)
    times = traj.t
    for i, (tau, buf) in enumerate(zip(o.delays, runner.buffers)):
        grid = (times[:, None] + tau * nodes[None, :]).reshape(-1)
        channels[f'phi{i + 1}'] = buf(grid).reshape(times.size, nodes.size, buf.dim)
    return Trajectory(
        t=traj.t, x=traj.x, y=traj.y, z=traj.z, v=traj.v, w=traj.w, u=traj.u,
        channels=channels, nodes=nodes, kind=o.kind,
    )


# PIE


def _derivative_samples(signal, times, dim, mode, h):
    if mode == 'analytic':
        if not signal.has_derivative:
            raise UsageError(f'{signal.describe()} has no analytic derivative')
        return np.array([signal.derivative(t, dim) for t in times]).reshape(times.size, dim)
    out = np.zeros((times.size, dim))
    f = lambda t: signal.evaluate(t, dim)  # noqa: E731
    for k, t in enumerate(times):
        if t < 2 * h:
            out[k] = (-25 * f(t) + 48 * f(t + h) - 36 * f(t + 2 * h)
                      + 16 * f(t + 3 * h) - 3 * f(t + 4 * h)) / (12 * h)
        else:
            out[k] = (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)
    return out


def discretize_pie(pie, M):
    """Every PIE operator as a dense matrix at collocation order M."""
    return {name: discretize(op, M) for name, op in pie.operators.items()}


def pie_initial_state(pie, x0, phi0, M):
    """[x0; d/ds phi_i0 at the nodes], function components stored component-major."""
    nodes = Collocation(M).nodes
    x0 = np.broadcast_to(np.asarray(0.0 if x0 is None else x0, dtype=float), (pie.dims.n,))
    phi0 = _channel_histories(pie, phi0, lambda tau: -1.0)
    derivs = [np.asarray(h.derivative(nodes)).reshape(M, h.dim) for h in phi0]
    stacked = np.hstack(derivs) if derivs else np.zeros((M, 0))
    return np.concatenate([x0, stacked.T.reshape(-1)])


def simulate_pie(pie, x0=None, w=None, u=None, cfg=None):
    """Integrate T X' + BT1 w' + BT2 u' = A X + B1 w + B2 u by the implicit trapezoid rule.

    x0 is a HybridVector (finite part and d/ds phi) or an already sampled state vector.
    """
    if not isinstance(pie, PIESpec):
        raise UsageError(f'simulate_pie expects a PIE spec, got {pie.kind}')
    cfg = cfg or SimConfig()
    ensure_valid(pie)
    cfg.check_delays(pie.delays)
    w, u = _input(w), _input(u)
    check_inputs(pie, w, u)
    dims, M, h = pie.dims, cfg.order, cfg.dt
    ops = discretize_pie(pie, M)
    size = dims.n + dims.total_channel_dim * M

    if x0 is None:
        X = np.zeros(size)
    elif isinstance(x0, HybridVector):
        X = Collocation(M).sample(x0)
    else:
        X = np.asarray(x0, dtype=float).reshape(-1)
    if X.size != size:
        raise DimensionError(f'initial PIE state has {X.size} entries, expected {size}')

    lhs = ops['T'] - 0.5 * h * ops['A']
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > get_setting('COND_BOUND'):
        raise DiscretizationError(
            f'implicit trapezoid matrix is singular at M={M}, dt={h} (condition {cond:.3g})')
    lu = scipy.linalg.lu_factor(lhs)
    rhs = ops['T'] + 0.5 * h * ops['A']

    times = cfg.times()
    W, U = w.samples(times, dims.m), u.samples(times, dims.p)
    forcing = W @ ops['B1'].T + U @ ops['B2'].T
    if pie.needs_smooth_w():
        forcing -= _derivative_samples(w, times, dims.m, cfg.derivative_mode, h) @ ops['BT1'].T
    if pie.needs_smooth_u():
        forcing -= _derivative_samples(u, times, dims.p, cfg.derivative_mode, h) @ ops['BT2'].T

    logger.info('simulating PIE: %d steps of dt=%g at M=%d (%d unknowns)', cfg.steps, h, M, size)
    states = np.zeros((times.size, size))
    states[0] = X
    for k in range(cfg.steps):
        X = scipy.linalg.lu_solve(lu, rhs @ X + 0.5 * h * (forcing[k] + forcing[k + 1]))
        _check_finite(X, times[k + 1])
        states[k + 1] = X

    z = states @ ops['C1'].T + W @ ops['D11'].T + U @ ops['D12'].T
    y = states @ ops['C2'].T + W @ ops['D21'].T + U @ ops['D22'].T
    return Trajectory(
        t=times, x=states[:, :dims.n], y=y, z=z, w=W, u=U,
        nodes=Collocation(M).nodes, state=states, kind='PIE',
    )


def pie_reconstruct(pie, traj):
    """[x; phi_i at the nodes] = T X + BT1 w + BT2 u along a PIE trajectory.

    Returns the x part (steps, n) and one (steps, M, p_i) array per channel.
    """
    if traj.state is None or traj.nodes is None:
        raise UsageError('trajectory carries no PIE state')
    M = traj.nodes.size
    dims = pie.dims
    full = (
        traj.state @ discretize(pie.T, M).T
        + traj.w @ discretize(pie.BT1, M).T
        + traj.u @ discretize(pie.BT2, M).T
    )
    x = full[:, :dims.n]
    fn = full[:, dims.n:].reshape(full.shape[0], dims.total_channel_dim, M)
    phis = [np.transpose(fn[:, sl, :], (0, 2, 1)) for sl in pie.channel_slices()]
    return x, phis


# comparison


@dataclass(frozen=True)
class SignalDeviation:
    signal: str
    max_abs: float
    max_rel: float
    time: float


@dataclass(frozen=True)
class ComparisonReport:
    deviations: tuple

    @property
    def max_abs(self):
        return max((d.max_abs for d in self.deviations), default=0.0)

    def within(self, tol):
        return self.max_abs <= tol

    def __getitem__(self, signal):
        for d in self.deviations:
            if d.signal == signal:
                return d
        raise KeyError(signal)

    def summary(self):
        return '\n'.join(
            f'{d.signal}: max |diff| = {d.max_abs:.3e} (relative {d.max_rel:.3e}) at t = {d.time:.6g}'
            for d in self.deviations
        )


def compare(a, b, signals=('x', 'y', 'z')):
    """Per-signal max absolute and relative deviation of b from a."""
    same_grid = a.t.shape == b.t.shape and np.allclose(a.t, b.t, rtol=0, atol=1e-12)
    if same_grid:
        mask = np.ones(a.t.size, dtype=bool)
    else:
        lo, hi = max(a.t[0], b.t[0]), min(a.t[-1], b.t[-1])
        if hi < lo:
            raise UsageError(f'trajectories cover disjoint times [{a.t[0]}, {a.t[-1]}] and '
                             f'[{b.t[0]}, {b.t[-1]}]')
        mask = (a.t >= lo - 1e-12) & (a.t <= hi + 1e-12)
    times = a.t[mask]

    deviations = []
    for name in signals:
        sa, sb = a.signal(name), b.signal(name)
        if sa.shape[1] != sb.shape[1]:
            raise DimensionError(f'{name} has {sa.shape[1]} components in one trajectory '
                                 f'and {sb.shape[1]} in the other')
        if sa.shape[1] == 0:
            deviations.append(SignalDeviation(name, 0.0, 0.0, float(times[0])))
            continue
        sa = sa[mask]
        sb = sb if same_grid else CubicSpline(b.t, sb, axis=0)(times)
        diff = np.abs(sa - sb)
        k = int(np.argmax(diff.max(axis=1)))
        max_abs = float(diff.max())
        scale = float(np.abs(sa).max())
        deviations.append(SignalDeviation(
            name, max_abs, max_abs / scale if scale > 0 else max_abs, float(times[k]),
        ))
    return ComparisonReport(tuple(deviations))


def simulate(spec, x0=None, histories=None, w=None, u=None, cfg=None):
    """Dispatch on the spec kind."""
    if isinstance(spec, PIESpec):
        return simulate_pie(spec, x0, w, u, cfg)
    if isinstance(spec, ODEPDESpec):
        return simulate_odepde(spec, x0, histories, w, u, cfg)
    if isinstance(spec, DDFSpec):
        return simulate_ddf(spec, x0, histories, w, u, cfg)
    if isinstance(spec, NDSSpec):
        return simulate_nds(spec, w, u, cfg)
    if isinstance(spec, DDESpec):
        return simulate_dde(spec, x0, w, u, cfg)
    raise UsageError(f'cannot simulate {type(spec).__name__}')

"""
Input signals w(t), u(t) and initial histories on [-tau, 0].

Signals are zero for t < 0. A descriptor is scalar-shaped or per-component;
``evaluate(t, dim)`` broadcasts it to a vector of length ``dim``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import DimensionError, UsageError

SIGNAL_KINDS = ('zero', 'step', 'polynomial', 'sinusoid', 'sampled')


def _vector(value, dim):
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return np.full(dim, float(value))
    if value.shape[-1] != dim:
        raise DimensionError(f'signal has {value.shape[-1]} components, expected {dim}')
    return value


@dataclass(frozen=True, eq=False)
class SignalDescriptor:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise UsageError(f'unknown signal kind {self.kind!r}')
        if self.kind == 'sampled':
            grid = np.asarray(self.params['grid'], dtype=float)
            values = np.asarray(self.params['values'], dtype=float)
            if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
                raise DimensionError('sampled signal grid must be strictly increasing')
            spline = CubicSpline(grid, values, axis=0)
            object.__setattr__(self, '_spline', spline)

    # constructors

    @classmethod
    def zero(cls):
        return cls('zero')

    @classmethod
    def constant(cls, level):
        return cls('polynomial', {'coeffs': [level]})

    @classmethod
    def step(cls, t0, level):
        return cls('step', {'t0': float(t0), 'level': level})

    @classmethod
    def polynomial(cls, coeffs):
        return cls('polynomial', {'coeffs': list(coeffs)})

    @classmethod
    def sinusoid(cls, amp, freq, phase=0.0):
        return cls('sinusoid', {'amp': amp, 'freq': freq, 'phase': phase})

    @classmethod
    def sampled(cls, grid, values):
        return cls('sampled', {'grid': grid, 'values': values})

    # evaluation

    @property
    def has_derivative(self):
        """True when the signal is W^{1,2} on [0, inf) with an analytic derivative."""
        if self.kind == 'step':
            return not np.any(np.asarray(self.params['level'], dtype=float))
        return True

    def _raw(self, t, dim, order):
        kind, prm = self.kind, self.params
        if kind == 'zero':
            return np.zeros(dim)
        if kind == 'step':
            if order:
                return np.zeros(dim)
            return _vector(prm['level'], dim) if t >= prm['t0'] else np.zeros(dim)
        if kind == 'polynomial':
            coeffs = np.asarray(prm['coeffs'], dtype=float)
            coeffs = np.polynomial.polynomial.polyder(coeffs, order) if order else coeffs
            if coeffs.size == 0:
                return np.zeros(dim)
            return _vector(np.polynomial.polynomial.polyval(t, coeffs), dim)
        if kind == 'sinusoid':
            amp = np.asarray(prm['amp'], dtype=float)
            omega = 2.0 * np.pi * np.asarray(prm['freq'], dtype=float)
            arg = omega * t + np.asarray(prm['phase'], dtype=float)
            value = amp * (omega * np.cos(arg) if order else np.sin(arg))
            return _vector(value, dim)
        spline = self._spline
        grid = spline.x
        tc = min(max(t, grid[0]), grid[-1])
        value = spline(tc, order) if order else spline(tc)
        return _vector(value, dim)

    def evaluate(self, t, dim):
        if t < 0.0:
            return np.zeros(dim)
        return self._raw(float(t), dim, 0)

    def derivative(self, t, dim):
        if t < 0.0:
            return np.zeros(dim)
        return self._raw(float(t), dim, 1)

    def samples(self, times, dim):
        return np.array([self.evaluate(t, dim) for t in times]).reshape(len(times), dim)

    def vanishes_at_zero(self, dim=1):
        return not np.any(self._raw(0.0, dim, 0))

    def describe(self):
        return f'{self.kind}{self.params if self.params else ""}'


def parse_signal(text):
    """Parse the command-line mini-grammar: zero, const:c, step:t0:c, sin:a:f:ph, poly:c0,c1,..."""
    text = (text or 'zero').strip()
    head, _, rest = text.partition(':')
    try:
        if head == 'zero':
            return SignalDescriptor.zero()
        if head == 'const':
            return SignalDescriptor.constant(float(rest))
        if head == 'step':
            t0, level = rest.split(':')
            return SignalDescriptor.step(float(t0), float(level))
        if head == 'sin':
            amp, freq, phase = rest.split(':')
            return SignalDescriptor.sinusoid(float(amp), float(freq), float(phase))
        if head == 'poly':
            return SignalDescriptor.polynomial([float(c) for c in rest.split(',')])
    except ValueError as exc:
        raise UsageError(f'malformed signal descriptor {text!r}: {exc}') from exc
    raise UsageError(f'unknown signal descriptor {text!r}')


class HistoryFunction:
    """Cubic interpolant of an initial history sampled on [lo, 0]."""

    def __init__(self, grid, values, channel=0):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if grid.ndim != 1 or grid.size < 2:
            raise DimensionError('history grid needs at least two points')
        if np.any(np.diff(grid) <= 0):
            raise DimensionError('history grid must be strictly increasing')
        if values.shape[0] != grid.size:
            raise DimensionError(
                f'history has {values.shape[0]} samples on a {grid.size}-point grid'
            )
        if not np.all(np.isfinite(values)):
            raise DimensionError('history values must be finite')
        self.channel = int(channel)
        self.grid = grid
        self.values = values
        self._spline = CubicSpline(grid, values, axis=0)

    @classmethod
    def constant(cls, value, lo, channel=0, points=5):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        grid = np.linspace(lo, 0.0, points)
        return cls(grid, np.tile(value, (points, 1)), channel=channel)

    @classmethod
    def zeros(cls, dim, lo, channel=0):
        return cls.constant(np.zeros(dim), lo, channel=channel)

    @classmethod
    def from_callable(cls, func, lo, hi=0.0, points=33, channel=0):
        grid = np.linspace(lo, hi, points)
        values = np.array([np.atleast_1d(func(s)) for s in grid], dtype=float)
        return cls(grid, values, channel=channel)

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def lo(self):
        return float(self.grid[0])

    @property
    def hi(self):
        return float(self.grid[-1])

    def _clip(self, s):
        s = np.asarray(s, dtype=float)
        span = self.hi - self.lo
        if np.any(s < self.lo - 1e-9 * span) or np.any(s > self.hi + 1e-9 * span):
            raise DimensionError(
                f'history on [{self.lo}, {self.hi}] queried at {np.min(s)}..{np.max(s)}'
            )
        return np.clip(s, self.lo, self.hi)

    def __call__(self, s):
        return self._spline(self._clip(s))

    def derivative(self, s):
        return self._spline(self._clip(s), 1)

    def scaled(self, factor, channel=None):
        """The history s -> h(factor * s), re-sampled on the mapped grid."""
        grid = self.grid / factor
        order = np.argsort(grid)
        return HistoryFunction(
            grid[order], self.values[order],
            channel=self.channel if channel is None else channel,
        )

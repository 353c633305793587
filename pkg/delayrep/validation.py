"""
Structural validation of specs, sewing-condition residuals, and input rules.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .conf import resolve
from .exceptions import DimensionError, InputSmoothnessError, SpecValidationError
from .kernels import PolyKernel
from .quadrature import panel_count, panel_nodes
from .specs import (
    DDE_INSTANT, DDF_CHANNEL, DDF_INSTANT, PIE_OPERATORS, DDESpec, DDFSpec, PIESpec,
    kernel_name, pie_operator_dims,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    name: str
    message: str

    def __str__(self):
        return f'{self.name}: {self.message}'


@dataclass
class ValidationReport:
    kind: str
    violations: list = field(default_factory=list)

    def add(self, name, message):
        self.violations.append(Violation(name, message))

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        # Truthy when something is wrong, so `if report:` reads as "has problems".
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def names(self):
        return [v.name for v in self.violations]

    def summary(self):
        return '; '.join(str(v) for v in self.violations)


def _check_matrix(report, name, value, expected):
    if tuple(np.shape(value)) != tuple(expected):
        report.add(name, f'shape {tuple(np.shape(value))}, expected {tuple(expected)}')
    elif not np.all(np.isfinite(value)):
        report.add(name, 'non-finite entries')


def _check_kernel(report, name, kernel, expected, domain, max_degree):
    if not isinstance(kernel, PolyKernel):
        report.add(name, 'not a polynomial kernel')
        return
    if kernel.shape != tuple(expected):
        report.add(name, f'shape {kernel.shape}, expected {tuple(expected)}')
    if kernel.nvars != 1:
        report.add(name, f'{kernel.nvars}-variable kernel, expected one variable')
    if not np.allclose(kernel.domain, domain, rtol=0, atol=1e-12):
        report.add(name, f'domain {kernel.domain}, expected {domain}')
    if kernel.effective_degree() > max_degree:
        report.add(name, f'degree {kernel.effective_degree()} exceeds the cap {max_degree}')
    if not np.all(np.isfinite(kernel.coeffs)):
        report.add(name, 'non-finite coefficients')


def _check_dims(report, dims):
    for symbol in ('n', 'm', 'p', 'q', 'r', 'K', 'nv'):
        if getattr(dims, symbol) < 0:
            report.add('dims', f'{symbol} is negative')
    if any(d < 0 for d in dims.channel_dims):
        report.add('dims', 'negative channel dimension')


def _check_delays(report, delays, K):
    delays = np.asarray(delays, dtype=float)
    if delays.size != K:
        report.add('delays', f'{delays.size} delays for K={K}')
    if delays.size and np.any(delays <= 0):
        report.add('delays', 'delays must be positive')
    if delays.size > 1 and np.any(np.diff(delays) <= 0):
        report.add('delays', 'delays not strictly increasing')


def _validate_dde(spec, report, max_degree):
    dims = spec.dims
    for name, (rs, cs) in DDE_INSTANT.items():
        _check_matrix(report, name, spec.matrices[name], (dims.size(rs), dims.size(cs)))
    for i, tau in enumerate(spec.delays):
        for name, (rs, cs) in spec.delayed_table.items():
            shape = (dims.size(rs), dims.size(cs))
            _check_matrix(report, f'{name}[{i + 1}]', spec.delayed[i][name], shape)
            kname = kernel_name(name)
            _check_kernel(report, f'{kname}[{i + 1}]', spec.kernels[i][kname], shape,
                          (-tau, 0.0), max_degree)


def _validate_ddf(spec, report, max_degree, cond_bound):
    dims = spec.dims
    if len(dims.channel_dims) != dims.K:
        report.add('dims', f'{len(dims.channel_dims)} channel dims for K={dims.K}')
        return
    for name, (rs, cs) in DDF_INSTANT.items():
        _check_matrix(report, name, spec.matrices[name], (dims.size(rs), dims.size(cs)))
    for i, (tau, pi) in enumerate(zip(spec.delays, dims.channel_dims)):
        for name, (rs, cs) in DDF_CHANNEL.items():
            shape = (dims.size(rs, pi), dims.size(cs, pi))
            _check_matrix(report, f'{name}[{i + 1}]', spec.channels[i][name], shape)
        _check_kernel(report, f'Cvd[{i + 1}]', spec.kernels[i], (dims.nv, pi),
                      (-tau, 0.0), max_degree)
    if report.violations:
        return
    loop = spec.loop_matrix()
    if loop.size:
        cond = np.linalg.cond(loop)
        if not np.isfinite(cond) or cond > cond_bound:
            report.add('D_I', f'D_I singular: I - sum_i hat(C_vi) D_rvi has condition {cond:.3g}')


# Blocks that must stay zero in each PIE operator slot.
PIE_EMPTY_BLOCKS = {
    'B1': ('Q1', 'Q2', 'R0', 'R1', 'R2'), 'B2': ('Q1', 'Q2', 'R0', 'R1', 'R2'),
    'BT1': ('P', 'Q1', 'R0', 'R1', 'R2'), 'BT2': ('P', 'Q1', 'R0', 'R1', 'R2'),
    'C1': ('Q2', 'R0', 'R1', 'R2'), 'C2': ('Q2', 'R0', 'R1', 'R2'),
    'D11': ('Q1', 'Q2', 'R0', 'R1', 'R2'), 'D12': ('Q1', 'Q2', 'R0', 'R1', 'R2'),
    'D21': ('Q1', 'Q2', 'R0', 'R1', 'R2'), 'D22': ('Q1', 'Q2', 'R0', 'R1', 'R2'),
}


def _validate_pie(spec, report, max_degree):
    dims = spec.dims
    if len(dims.channel_dims) != len(spec.delays):
        report.add('dims', f'{len(dims.channel_dims)} channel dims for {len(spec.delays)} delays')
    for name in PIE_OPERATORS:
        op = spec.operators.get(name)
        if op is None:
            report.add(name, 'missing operator')
            continue
        expected = pie_operator_dims(dims, name)
        if op.dims != expected:
            report.add(name, f'operator dims {op.dims}, expected {expected}')
            continue
        if op.max_degree() > max_degree:
            report.add(name, f'degree {op.max_degree()} exceeds the cap {max_degree}')
        for block in PIE_EMPTY_BLOCKS.get(name, ()):
            value = getattr(op, block)
            nonzero = np.any(value) if block == 'P' else not value.is_zero()
            if nonzero:
                report.add(name, f'{block} block must be zero')


def validate(spec, max_degree=None, cond_bound=None):
    """Return a report listing every violated structural invariant of `spec`."""
    max_degree = resolve(max_degree, 'MAX_KERNEL_DEGREE')
    cond_bound = resolve(cond_bound, 'COND_BOUND')
    report = ValidationReport(kind=spec.kind)
    _check_dims(report, spec.dims)
    _check_delays(report, spec.delays, spec.dims.K)
    if isinstance(spec, DDFSpec):
        _validate_ddf(spec, report, max_degree, cond_bound)
    elif isinstance(spec, DDESpec):
        _validate_dde(spec, report, max_degree)
    elif isinstance(spec, PIESpec):
        _validate_pie(spec, report, max_degree)
    else:
        report.add('type', f'cannot validate {type(spec).__name__}')
    if report.violations:
        logger.info('%s spec failed validation: %s', spec.kind, report.summary())
    return report


def ensure_valid(spec, **kwargs):
    report = validate(spec, **kwargs)
    if report:
        raise SpecValidationError(f'invalid {spec.kind} spec: {report.summary()}', report)
    return spec


def check_inputs(spec, w, u):
    """Enforce the W^{1,2}, zero-at-start rule on inputs that enter through delayed blocks."""
    for label, needed, signal in (('w', spec.needs_smooth_w(), w), ('u', spec.needs_smooth_u(), u)):
        if not needed:
            continue
        dim = spec.dims.m if label == 'w' else spec.dims.p
        if not signal.has_derivative:
            raise InputSmoothnessError(f'{label} must be differentiable ({signal.describe()})')
        if not signal.vanishes_at_zero(dim):
            raise InputSmoothnessError(f'{label} must vanish at t=0 ({signal.describe()})')


def _history_integral(kernel, history, lo, scale=1.0):
    """Integral of kernel(scale * s) @ h(s) over [lo, 0], panel by panel on the history knots."""
    knots = history.grid[(history.grid > lo) & (history.grid < 0.0)]
    breaks = np.concatenate([[lo], knots, [0.0]])
    npts = panel_count(kernel.effective_degree(), resolve(None, 'QUADRATURE_PANEL_NODES'))
    s, wts = panel_nodes(breaks, npts)
    k = kernel.evaluate_many(scale * s)
    h = history(s)
    return np.einsum('q,qij,qj->i', wts, k, h)


def _check_histories(spec, histories, x0):
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != spec.dims.n:
        raise DimensionError(f'x0 has {x0.size} entries, expected n={spec.dims.n}')
    if len(histories) != spec.dims.K:
        raise DimensionError(f'{len(histories)} histories for K={spec.dims.K} channels')
    for i, (h, pi) in enumerate(zip(histories, spec.dims.channel_dims)):
        if h.dim != pi:
            raise DimensionError(f'history {i + 1} has dimension {h.dim}, expected {pi}')
    return x0


def _residuals(spec, x0, histories, v0, endpoint):
    out = []
    for i, h in enumerate(histories):
        c = spec.channels[i]
        out.append(h(endpoint).reshape(-1) - c['Cr'] @ x0 - c['Drv'] @ v0)
    return out


def check_sewing_ddf(spec, x0, r0):
    """Sewing residual r_i0(0) - C_ri x0 - D_rvi v(0) for every channel."""
    x0 = _check_histories(spec, r0, x0)
    v0 = np.zeros(spec.dims.nv)
    for i, (tau, h) in enumerate(zip(spec.delays, r0)):
        if h.lo > -tau + 1e-12 * tau:
            raise DimensionError(f'history {i + 1} covers [{h.lo}, 0], needs [{-tau}, 0]')
        v0 += spec.channels[i]['Cv'] @ h(-tau).reshape(-1)
        v0 += _history_integral(spec.kernels[i], h, -tau)
    return _residuals(spec, x0, r0, v0, 0.0)


def check_sewing_odepde(spec, x0, phi0):
    """Sewing residual on [-1, 0]: phi_i0(0) - C_ri x0 - D_rvi v(0)."""
    x0 = _check_histories(spec, phi0, x0)
    v0 = np.zeros(spec.dims.nv)
    for i, (tau, h) in enumerate(zip(spec.delays, phi0)):
        if h.lo > -1.0 + 1e-12:
            raise DimensionError(f'history {i + 1} covers [{h.lo}, 0], needs [-1, 0]')
        v0 += spec.channels[i]['Cv'] @ h(-1.0).reshape(-1)
        v0 += tau * _history_integral(spec.kernels[i], h, -1.0, scale=tau)
    return _residuals(spec, x0, phi0, v0, 0.0)


def max_residual(residuals):
    return max((float(np.max(np.abs(r))) for r in residuals if np.size(r)), default=0.0)

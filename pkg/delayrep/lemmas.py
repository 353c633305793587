"""
End-to-end equivalence checks between representations.

Each check simulates one system along two routes and reports the largest
deviations:

    1  DDE vs its DDF                         (x, y, z)
    2  NDS vs its DDF, zero initial data      (x, y, z)
    3  DDF vs its ODE-PDE                     (x, y, z) and phi_i(t, -1) = r_i(t - tau_i)
    4  DDF vs its PIE                         (y, z) and T X + BT1 w + BT2 u = [x; phi]
    5  static-output-feedback DDF             y = C2 x + D21 w + sum_i D22_i F y(t - tau_i)
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .convert import (
    dde_to_ddf, ddf_to_odepde, ddf_to_pie, nds_to_ddf, odepde_to_ddf,
)
from .exceptions import UsageError
from .inputs import SignalDescriptor
from .kernels import PolyKernel
from .simulate import (
    SimConfig, as_history, compare, pie_initial_state, pie_reconstruct, simulate_dde,
    simulate_ddf, simulate_nds, simulate_odepde, simulate_pie, stacked_history,
)
from .specs import DDESpec, DDFSpec, Dims, NDSSpec, ODEPDESpec

logger = logging.getLogger(__name__)

TOLERANCES = {1: 1e-8, 2: 1e-8, 3: 1e-10, 4: 1e-3, 5: 1e-9}
DESCRIPTIONS = {
    1: 'DDE and its DDF produce the same (x, y, z)',
    2: 'NDS and its DDF produce the same (x, y, z)',
    3: 'ODE-PDE characteristics reproduce the DDF channels',
    4: 'PIE outputs and reconstructed state match the DDF',
    5: 'static-output-feedback DDF satisfies the output recursion',
}


@dataclass(frozen=True)
class LemmaResult:
    lemma: int
    deviations: dict
    tolerance: float

    @property
    def description(self):
        return DESCRIPTIONS[self.lemma]

    @property
    def max_deviation(self):
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self):
        return self.max_deviation <= self.tolerance


def default_w():
    """A smooth disturbance vanishing at t = 0."""
    return SignalDescriptor.sinusoid(1.0, 0.5)


def _default_cfg(spec, cfg):
    if cfg is not None:
        return cfg
    return SimConfig(t_final=3.0 * max(spec.delays, default=1.0))


def _deviations(report, prefix=''):
    return {f'{prefix}{d.signal}': d.max_abs for d in report.deviations}


def _as_ddf(spec):
    if isinstance(spec, ODEPDESpec):
        return odepde_to_ddf(spec)
    if isinstance(spec, DDFSpec):
        return spec
    if type(spec) is DDESpec:
        return dde_to_ddf(spec)
    if isinstance(spec, NDSSpec):
        return nds_to_ddf(spec)
    raise UsageError(f'cannot read a {spec.kind} spec as a DDF')


def check_dde_ddf(dde, cfg=None, w=None, u=None, x0=1.0):
    if type(dde) is not DDESpec:
        raise UsageError(f'lemma 1 needs a DDE spec, got {dde.kind}')
    cfg = _default_cfg(dde, cfg)
    w = w or default_w()
    history = as_history(x0, dde.dims.n, -dde.max_delay)
    ref = simulate_dde(dde, history, w, u, cfg)
    ddf = dde_to_ddf(dde)
    r0 = [stacked_history(history, dde.dims.m + dde.dims.p)] * dde.dims.K
    other = simulate_ddf(ddf, history(0.0).reshape(-1), r0, w, u, cfg)
    return LemmaResult(1, _deviations(compare(ref, other)), TOLERANCES[1])


def check_nds_ddf(nds, cfg=None, w=None, u=None):
    if not isinstance(nds, NDSSpec):
        raise UsageError(f'lemma 2 needs an NDS spec, got {nds.kind}')
    cfg = _default_cfg(nds, cfg)
    w = w or default_w()
    ref = simulate_nds(nds, w, u, cfg)
    other = simulate_ddf(nds_to_ddf(nds), None, None, w, u, cfg)
    return LemmaResult(2, _deviations(compare(ref, other)), TOLERANCES[2])


def check_ddf_odepde(spec, cfg=None, w=None, u=None):
    ddf = _as_ddf(spec)
    cfg = _default_cfg(ddf, cfg)
    w = w or default_w()
    ref = simulate_ddf(ddf, None, None, w, u, cfg)
    pde = simulate_odepde(ddf_to_odepde(ddf), None, None, w, u, cfg)
    deviations = _deviations(compare(ref, pde))
    # phi_i(t, -1) against the grid samples of r_i, shifted by tau_i
    for i, tau in enumerate(ddf.delays):
        r = ref.channels[f'r{i + 1}']
        boundary = pde.channels[f'phi{i + 1}'][:, 0, :]
        late = ref.t >= tau
        if not late.any() or r.shape[1] == 0:
            continue
        expected = CubicSpline(ref.t, r, axis=0)(ref.t[late] - tau)
        deviations[f'phi{i + 1}(-1)'] = float(np.max(np.abs(boundary[late] - expected)))
    return LemmaResult(3, deviations, TOLERANCES[3])


def check_ddf_pie(spec, cfg=None, w=None, u=None):
    ddf = _as_ddf(spec)
    cfg = _default_cfg(ddf, cfg)
    w = w or default_w()
    pie = ddf_to_pie(ddf)
    M = cfg.order
    ref = simulate_odepde(ddf_to_odepde(ddf), None, None, w, u, cfg)
    X0 = pie_initial_state(pie, None, None, M)
    traj = simulate_pie(pie, X0, w, u, replace(cfg, integrator='implicit-trapezoid'))
    deviations = _deviations(compare(ref, traj, signals=('y', 'z')))

    x_rec, phis = pie_reconstruct(pie, traj)
    deviations['reconstructed x'] = float(np.max(np.abs(x_rec - ref.x), initial=0.0))
    for i, phi in enumerate(phis):
        expected = ref.channels[f'phi{i + 1}']
        deviations[f'reconstructed phi{i + 1}'] = float(np.max(np.abs(phi - expected), initial=0.0))
    return LemmaResult(4, deviations, TOLERANCES[4])


def feedback_gain(ddf):
    """F with [C_r B_r1 D_rv] = F [C2 D21 D2v], recovered from channel 1 of an SOF DDF."""
    if 'sof_network_to_ddf' not in ddf.provenance:
        raise UsageError('lemma 5 needs a DDF built by sof_network_to_ddf')
    mats, c = ddf.matrices, ddf.channels[0]
    sensed = np.hstack([mats['C2'], mats['D21'], mats['D2v']])
    fed = np.hstack([c['Cr'], c['Br1'], c['Drv']])
    return fed @ np.linalg.pinv(sensed)


def check_sof(ddf, cfg=None, w=None):
    if not isinstance(ddf, DDFSpec):
        raise UsageError(f'lemma 5 needs a DDF spec, got {ddf.kind}')
    F = feedback_gain(ddf)
    cfg = _default_cfg(ddf, cfg)
    traj = simulate_ddf(ddf, None, None, w or default_w(), None, cfg)
    mats = ddf.matrices
    y = CubicSpline(traj.t, traj.y, axis=0) if traj.y.shape[1] else None
    recursion = np.zeros_like(traj.y)
    p = ddf.dims.channel_dims[0] if ddf.dims.K else 0
    for i, tau in enumerate(ddf.delays):
        D22 = mats['D2v'][:, i * p:(i + 1) * p]
        late = traj.t - tau > 0
        if y is not None and late.any():
            recursion[late] += y(traj.t[late] - tau) @ (D22 @ F).T
    residual = traj.y - (traj.x @ mats['C2'].T + traj.w @ mats['D21'].T + recursion)
    return LemmaResult(5, {'y recursion': float(np.max(np.abs(residual), initial=0.0))}, TOLERANCES[5])


CHECKS = {1: check_dde_ddf, 2: check_nds_ddf, 3: check_ddf_odepde, 4: check_ddf_pie, 5: check_sof}


def run_lemma(spec, lemma, cfg=None, w=None, u=None):
    """Run check `lemma` (1-5) on `spec` and log the result."""
    if lemma not in CHECKS:
        raise UsageError(f'no lemma {lemma}; choose from {sorted(CHECKS)}')
    if lemma == 5:
        result = check_sof(spec, cfg, w)
    else:
        result = CHECKS[lemma](spec, cfg, w, u)
    logger.info('lemma %d: max deviation %.3e (tolerance %.1e)', lemma, result.max_deviation, result.tolerance)
    return result


def random_dde(n=2, m=1, p=1, q=1, r=1, K=2, seed=0, kernel_degree=None):
    """A reproducible, mildly stable DDE with K distinct delays in [0.5, 1.5].

    With `kernel_degree` set, every delay also carries a distributed A kernel.
    """
    rng = np.random.default_rng(seed)
    delays = np.sort(rng.choice(np.arange(500, 1500), size=K, replace=False)) / 1000.0
    small = lambda rows, cols: rng.standard_normal((rows, cols)) / (2.0 * K)  # noqa: E731
    delayed = {name: [] for name in ('A', 'B1', 'B2', 'C1', 'D11', 'D12', 'C2', 'D21', 'D22')}
    for _ in range(K):
        for name, (rows, cols) in {
            'A': (n, n), 'B1': (n, m), 'B2': (n, p), 'C1': (q, n), 'D11': (q, m),
            'D12': (q, p), 'C2': (r, n), 'D21': (r, m), 'D22': (r, p),
        }.items():
            delayed[name].append(small(rows, cols))
    kernels = None
    if kernel_degree is not None:
        kernels = {'Ad': [
            PolyKernel(rng.standard_normal((kernel_degree + 1, n, n)) / (4.0 * K), domain=(-tau, 0.0))
            for tau in delays
        ]}
    return DDESpec.build(
        Dims(n=n, m=m, p=p, q=q, r=r, K=K),
        delays,
        matrices={
            'A0': -2.0 * np.eye(n) + 0.3 * rng.standard_normal((n, n)),
            'B1': rng.standard_normal((n, m)), 'B2': rng.standard_normal((n, p)),
            'C10': rng.standard_normal((q, n)), 'D11': rng.standard_normal((q, m)),
            'D12': rng.standard_normal((q, p)), 'C20': rng.standard_normal((r, n)),
            'D21': rng.standard_normal((r, m)), 'D22': rng.standard_normal((r, p)),
        },
        delayed=delayed,
        kernels=kernels,
    )


__all__ = [
    'LemmaResult', 'TOLERANCES', 'check_dde_ddf', 'check_nds_ddf',
    'check_ddf_odepde', 'check_ddf_pie', 'check_sof', 'feedback_gain', 'run_lemma', 'random_dde',
]

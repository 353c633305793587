"""
Conversions between delay-system representations.

    DDE  --dde_to_ddf / minimal_ddf_from_dde-->  DDF  <--ddf_to_odepde / odepde_to_ddf-->  ODE-PDE
    NDS  --nds_to_ddf-->                         DDF  --ddf_to_pie-->                       PIE
    DDE  --dde_to_pie-->                                                                    PIE

Integrals of polynomial kernels are taken in closed form, so two routes to the
same PIE agree to rounding.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .conf import resolve
from .exceptions import DimensionError, UsageError, WellPosednessError
from .kernels import PolyKernel, block_kernel
from .piops import PIOperator
from .specs import DDESpec, DDFSpec, Dims, NDSSpec, ODEPDESpec, PIESpec

logger = logging.getLogger(__name__)

UNIT = (-1.0, 0.0)

REACHABILITY = {
    'DDE': ('DDF', 'ODEPDE', 'PIE'),
    'NDS': ('DDF', 'ODEPDE', 'PIE'),
    'DDF': ('ODEPDE', 'PIE'),
    'ODEPDE': ('DDF', 'PIE'),
    'PIE': (),
}


@dataclass
class ConversionScratch:
    """Intermediate matrices of a DDF/DDE to PIE conversion, kept for inspection and tests."""
    I_tau: np.ndarray
    T0: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    Ta: PolyKernel
    Tb: PolyKernel
    bold: dict
    A_s: PolyKernel
    C11_s: PolyKernel
    C21_s: PolyKernel
    hat_Cv: list = field(default_factory=list)
    D_I: np.ndarray = None
    C_I: list = field(default_factory=list)
    C_vx: np.ndarray = None
    D_vw: np.ndarray = None
    D_vu: np.ndarray = None
    X: list = field(default_factory=list)


@dataclass(frozen=True)
class SOFPlant:
    """Plant of a static-output-feedback network with input delays.

    x' = A0 x + B1 w + sum_i B2[i] u(t - tau_i)
    z  = C1 x + D12 u
    y  = C2 x + D21 w + sum_i D22[i] u(t - tau_i)
    """
    A0: np.ndarray
    B1: np.ndarray
    C1: np.ndarray
    D12: np.ndarray
    C2: np.ndarray
    D21: np.ndarray
    B2: tuple
    D22: tuple
    delays: tuple


def _require_kind(spec, cls, operation):
    if type(spec) is not cls:
        raise UsageError(f'{operation} expects a {cls.kind} spec, got {spec.kind}')


def _log_channels(source, target, ddf):
    logger.info(
        '%s -> %s: %d channels, sum p_i = %d, n_v = %d',
        source, target, ddf.dims.K, ddf.dims.total_channel_dim, ddf.dims.nv,
    )


def _selector(rows, offset, width, total):
    """The rows x total matrix [0 I 0] picking `width` columns starting at `offset`."""
    out = np.zeros((rows, total))
    out[:, offset:offset + width] = np.eye(rows, width)
    return out


def _instant_ddf_matrices(matrices, dims):
    n, q, r = dims.n, dims.q, dims.r
    nv = n + q + r
    return {
        'A0': matrices['A0'], 'B1': matrices['B1'], 'B2': matrices['B2'],
        'C1': matrices['C10'], 'D11': matrices['D11'], 'D12': matrices['D12'],
        'C2': matrices['C20'], 'D21': matrices['D21'], 'D22': matrices['D22'],
        'Bv': _selector(n, 0, n, nv), 'D1v': _selector(q, n, q, nv), 'D2v': _selector(r, n + q, r, nv),
    }


def dde_to_ddf(d):
    """One channel per delay carrying r_i = [x; w; u]; the delayed blocks move into C_vi."""
    _require_kind(d, DDESpec, 'dde_to_ddf')
    dims = d.dims
    n, m, p = dims.n, dims.m, dims.p
    pi = n + m + p
    eye = np.eye(pi)
    K = dims.K
    ddf = DDFSpec.build(
        replace(dims, channel_dims=(pi,) * K, nv=n + dims.q + dims.r),
        d.delays,
        matrices=_instant_ddf_matrices(d.matrices, dims),
        channels={
            'Cr': [eye[:, :n]] * K, 'Br1': [eye[:, n:n + m]] * K, 'Br2': [eye[:, n + m:]] * K,
            'Cv': [d.delayed_block(i) for i in range(K)],
        },
        Cvd=[d.kernel_block(i) for i in range(K)],
        provenance=('dde_to_ddf',),
    )
    _log_channels('DDE', 'DDF', ddf)
    return ddf


def nds_to_ddf(s):
    """One channel per delay carrying r_i = [x; w; u; x'], with x' fed back through D_rvi."""
    _require_kind(s, NDSSpec, 'nds_to_ddf')
    dims = s.dims
    n, m, p = dims.n, dims.m, dims.p
    nv = n + dims.q + dims.r
    pi = 2 * n + m + p
    K = dims.K
    mats = s.matrices
    Cr = np.vstack([np.eye(n), np.zeros((m + p, n)), mats['A0']])
    Br1 = np.vstack([np.zeros((n, m)), np.eye(m), np.zeros((p, m)), mats['B1']])
    Br2 = np.vstack([np.zeros((n + m, p)), np.eye(p), mats['B2']])
    Drv = np.zeros((pi, nv))
    Drv[n + m + p:, :n] = np.eye(n)
    ddf = DDFSpec.build(
        replace(dims, channel_dims=(pi,) * K, nv=nv),
        s.delays,
        matrices=_instant_ddf_matrices(mats, dims),
        channels={
            'Cr': [Cr] * K, 'Br1': [Br1] * K, 'Br2': [Br2] * K, 'Drv': [Drv] * K,
            'Cv': [s.delayed_block(i) for i in range(K)],
        },
        Cvd=[s.kernel_block(i) for i in range(K)],
        provenance=('nds_to_ddf',),
    )
    _log_channels('NDS', 'DDF', ddf)
    return ddf


def ddf_to_odepde(d):
    _require_kind(d, DDFSpec, 'ddf_to_odepde')
    return d.as_kind(ODEPDESpec)


def odepde_to_ddf(o):
    _require_kind(o, ODEPDESpec, 'odepde_to_ddf')
    return o.as_kind(DDFSpec)


def ddf_history_to_odepde(history, tau):
    """phi_0(s) = r_0(tau * s) on [-1, 0]."""
    return history.scaled(tau)


def odepde_history_to_ddf(history, tau):
    """r_0(s) = phi_0(s / tau) on [-tau, 0]."""
    return history.scaled(1.0 / tau)


# PIE assembly


def _row_kernel(kernels, rows):
    if not kernels:
        return PolyKernel.zeros(rows, 0, domain=UNIT)
    return block_kernel([list(kernels)], domain=UNIT)


def _split_rows(kernel, sizes):
    out, start = [], 0
    for size in sizes:
        out.append(PolyKernel(kernel.coeffs[:, start:start + size], domain=kernel.domain))
        start += size
    return out


def _split_bold(block, dims):
    n, m, p, q, r = dims.n, dims.m, dims.p, dims.q, dims.r
    rows = {'A': slice(0, n), 'C1': slice(n, n + q), 'C2': slice(n + q, n + q + r)}
    cols = {'x': slice(0, n), 'w': slice(n, n + m), 'u': slice(n + m, n + m + p)}
    names = {
        ('A', 'x'): 'A0', ('A', 'w'): 'B1', ('A', 'u'): 'B2',
        ('C1', 'x'): 'C10', ('C1', 'w'): 'D11', ('C1', 'u'): 'D12',
        ('C2', 'x'): 'C20', ('C2', 'w'): 'D21', ('C2', 'u'): 'D22',
    }
    return {name: block[rows[r_], cols[c_]] for (r_, c_), name in names.items()}


def _assemble_pie(dims, delays, scratch):
    n, m, p, q, r = dims.n, dims.m, dims.p, dims.q, dims.r
    P = dims.total_channel_dim
    bold = scratch.bold
    build = PIOperator.build
    operators = {
        'T': build(n, n, P, P, P=np.eye(n), Q2=scratch.T0, R1=scratch.Ta, R2=scratch.Tb),
        'A': build(n, n, P, P, P=bold['A0'], Q1=scratch.A_s, R0=scratch.I_tau),
        'B1': build(n, m, P, 0, P=bold['B1']),
        'B2': build(n, p, P, 0, P=bold['B2']),
        'C1': build(q, n, 0, P, P=bold['C10'], Q1=scratch.C11_s),
        'C2': build(r, n, 0, P, P=bold['C20'], Q1=scratch.C21_s),
        'D11': build(q, m, 0, 0, P=bold['D11']),
        'D12': build(q, p, 0, 0, P=bold['D12']),
        'D21': build(r, m, 0, 0, P=bold['D21']),
        'D22': build(r, p, 0, 0, P=bold['D22']),
        'BT1': build(n, m, P, 0, Q2=scratch.T1),
        'BT2': build(n, p, P, 0, Q2=scratch.T2),
    }
    pie_dims = Dims(n=n, m=m, p=p, q=q, r=r, K=len(delays), channel_dims=tuple(dims.channel_dims))
    return PIESpec.build(pie_dims, delays, operators, scratch=scratch)


def _I_tau(delays, channel_dims):
    diag = np.concatenate([np.full(pi, 1.0 / tau) for tau, pi in zip(delays, channel_dims)]) \
        if len(delays) else np.zeros(0)
    return np.diag(diag)


def _invert_loop(ddf, cond_bound):
    loop = ddf.loop_matrix()
    nv = loop.shape[0]
    if nv == 0:
        return np.zeros((0, 0))
    cond = np.linalg.cond(loop)
    if not np.isfinite(cond) or cond > cond_bound:
        raise WellPosednessError(
            f'I - sum_i hat(C_vi) D_rvi over channels 1..{ddf.dims.K} is singular '
            f'(condition {cond:.3g} > {cond_bound:.3g})'
        )
    return scipy.linalg.lu_solve(scipy.linalg.lu_factor(loop), np.eye(nv))


def ddf_to_pie(d, cond_bound=None):
    """PIE operators of a DDF (or ODE-PDE); the PIE state is (x, d/ds phi_i)."""
    if not isinstance(d, DDFSpec):
        raise UsageError(f'ddf_to_pie expects a DDF or ODEPDE spec, got {d.kind}')
    cond_bound = resolve(cond_bound, 'COND_BOUND')
    dims = d.dims
    n, m, p = dims.n, dims.m, dims.p
    nv, K = dims.nv, dims.K
    P = dims.total_channel_dim

    scaled = [k.rescaled(tau) for k, tau in zip(d.kernels, d.delays)]
    hat_Cv = [d.channels[i]['Cv'] + scaled[i].integral() for i in range(K)]
    D_I = _invert_loop(d, cond_bound)

    C_I = []
    for i in range(K):
        inner = PolyKernel.constant(d.channels[i]['Cv'], domain=UNIT) + scaled[i].antiderivative(-1.0)
        C_I.append(inner.left(-D_I))

    gathered = np.zeros((nv, n + m + p))
    for i in range(K):
        gathered += hat_Cv[i] @ d.channel_block(i)
    V = D_I @ gathered
    C_vx, D_vw, D_vu = V[:, :n], V[:, n:n + m], V[:, n + m:]

    stacked = np.vstack([d.channel_block(i) for i in range(K)]) if K else np.zeros((0, n + m + p))
    Drv = np.vstack([d.channels[i]['Drv'] for i in range(K)]) if K else np.zeros((0, nv))
    T = stacked + Drv @ V
    C_I_row = _row_kernel(C_I, nv)
    Ta = PolyKernel.in_theta(C_I_row.left(Drv))
    Tb = Ta - PolyKernel.constant(np.eye(P), nvars=2, domain=UNIT)

    feed = np.vstack([d.matrices['Bv'], d.matrices['D1v'], d.matrices['D2v']])
    A_s, C11_s, C21_s = _split_rows(C_I_row.left(feed), (n, dims.q, dims.r))
    instant = np.block([
        [d.matrices['A0'], d.matrices['B1'], d.matrices['B2']],
        [d.matrices['C1'], d.matrices['D11'], d.matrices['D12']],
        [d.matrices['C2'], d.matrices['D21'], d.matrices['D22']],
    ])
    scratch = ConversionScratch(
        I_tau=_I_tau(d.delays, dims.channel_dims),
        T0=T[:, :n], T1=T[:, n:n + m], T2=T[:, n + m:],
        Ta=Ta, Tb=Tb,
        bold=_split_bold(instant + feed @ V, dims),
        A_s=A_s, C11_s=C11_s, C21_s=C21_s,
        hat_Cv=hat_Cv, D_I=D_I, C_I=C_I, C_vx=C_vx, D_vw=D_vw, D_vu=D_vu,
    )
    pie = _assemble_pie(dims, d.delays, scratch)
    logger.info('%s -> PIE: state R^%d x L2^%d', d.kind, n, P)
    return pie


def dde_to_pie(d):
    """PIE operators of a DDE directly, without building the intermediate DDF."""
    _require_kind(d, DDESpec, 'dde_to_pie')
    dims = d.dims
    n, m, p, q, r = dims.n, dims.m, dims.p, dims.q, dims.r
    K = dims.K
    width = n + m + p

    bold = d.instant_block().copy()
    X = []
    for i, tau in enumerate(d.delays):
        constant = d.delayed_block(i)
        scaled = d.kernel_block(i).rescaled(tau)
        X.append(PolyKernel.constant(constant, domain=UNIT) + scaled.antiderivative(-1.0))
        bold += constant + scaled.integral()
    A_row = -_row_kernel(X, n + q + r)
    A_s, C11_s, C21_s = _split_rows(A_row, (n, q, r))

    eye = np.eye(width)
    select = np.vstack([eye] * K) if K else np.zeros((0, width))
    P = K * width
    scratch = ConversionScratch(
        I_tau=_I_tau(d.delays, (width,) * K),
        T0=select[:, :n], T1=select[:, n:n + m], T2=select[:, n + m:],
        Ta=PolyKernel.zeros(P, P, nvars=2, domain=UNIT),
        Tb=PolyKernel.constant(-np.eye(P), nvars=2, domain=UNIT),
        bold=_split_bold(bold, dims),
        A_s=A_s, C11_s=C11_s, C21_s=C21_s,
        X=X,
    )
    pie = _assemble_pie(replace(dims, channel_dims=(width,) * K), d.delays, scratch)
    logger.info('DDE -> PIE: state R^%d x L2^%d', n, P)
    return pie


def minimal_ddf_from_dde(d, rank_tol=None):
    """DDF whose channel i carries only the numerical row space of the delay-i blocks.

    The constant block and every kernel coefficient block at delay i are stacked
    and factored together by SVD, so one projection serves both.
    """
    _require_kind(d, DDESpec, 'minimal_ddf_from_dde')
    rank_tol = resolve(rank_tol, 'RANK_TOL')
    dims = d.dims
    n, m, p = dims.n, dims.m, dims.p
    nv = n + dims.q + dims.r

    delays, channel_dims, provenance = [], [], ['minimal_ddf_from_dde']
    channels = {'Cr': [], 'Br1': [], 'Br2': [], 'Cv': []}
    kernels = []
    for i, tau in enumerate(d.delays):
        constant = d.delayed_block(i)
        kernel = d.kernel_block(i).trimmed()
        stacked = np.vstack([constant, *kernel.coeffs])
        _, sv, Vt = scipy.linalg.svd(stacked, full_matrices=False)
        rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
        if rank == 0:
            provenance.append(f'dropped channel {i + 1} (tau={tau:g}): rank 0')
            logger.info('dropping channel %d (tau=%g): delayed blocks vanish', i + 1, tau)
            continue
        W = Vt[:rank].T  # (n+m+p) x rank, orthonormal columns
        delays.append(tau)
        channel_dims.append(rank)
        channels['Cr'].append(W[:n].T)
        channels['Br1'].append(W[n:n + m].T)
        channels['Br2'].append(W[n + m:].T)
        channels['Cv'].append(constant @ W)
        kernels.append(PolyKernel(np.matmul(kernel.coeffs, W), domain=kernel.domain))
        provenance.append(f'channel {len(delays)} <- delay {i + 1} (tau={tau:g}), rank {rank}')

    ddf = DDFSpec.build(
        replace(dims, K=len(delays), channel_dims=tuple(channel_dims), nv=nv),
        delays,
        matrices=_instant_ddf_matrices(d.matrices, dims),
        channels=channels,
        Cvd=kernels,
        provenance=tuple(provenance),
    )
    _log_channels('DDE', 'minimal DDF', ddf)
    return ddf


def sof_network_to_ddf(plant, F):
    """DDF of the closed loop u = F y; the delayed output recursion becomes D_rvi."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    A0 = np.atleast_2d(np.asarray(plant.A0, dtype=float))
    B1, C1, D12 = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (plant.B1, plant.C1, plant.D12))
    C2, D21 = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (plant.C2, plant.D21))
    B2 = [np.atleast_2d(np.asarray(b, dtype=float)) for b in plant.B2]
    D22 = [np.atleast_2d(np.asarray(b, dtype=float)) for b in plant.D22]
    N = len(plant.delays)
    if len(B2) != N or len(D22) != N:
        raise DimensionError(f'{len(B2)} B2 and {len(D22)} D22 blocks for {N} delays')
    n, m = B1.shape
    q, r = C1.shape[0], C2.shape[0]
    p = B2[0].shape[1] if B2 else D12.shape[1]
    if F.shape != (p, r):
        raise DimensionError(f'F is {F.shape}, expected {(p, r)} (inputs x outputs)')

    Bv = np.hstack(B2) if B2 else np.zeros((n, 0))
    D2v = np.hstack(D22) if D22 else np.zeros((r, 0))
    nv = N * p
    Cv = [np.eye(nv)[:, i * p:(i + 1) * p] for i in range(N)]
    ddf = DDFSpec.build(
        Dims(n=n, m=m, p=0, q=q, r=r, K=N, channel_dims=(p,) * N, nv=nv),
        plant.delays,
        matrices={
            'A0': A0, 'B1': B1,
            'C1': C1 + D12 @ F @ C2, 'D11': D12 @ F @ D21, 'D1v': D12 @ F @ D2v,
            'C2': C2, 'D21': D21, 'D2v': D2v,
            'Bv': Bv,
        },
        channels={
            'Cr': [F @ C2] * N, 'Br1': [F @ D21] * N, 'Drv': [F @ D2v] * N, 'Cv': Cv,
        },
        provenance=('sof_network_to_ddf',),
    )
    _log_channels('SOF network', 'DDF', ddf)
    return ddf


def channel_dimensions(ddf):
    """(p_i per channel, sum of p_i)"""
    dims = list(ddf.dims.channel_dims)
    return dims, int(sum(dims))


def naive_channel_dimensions(spec):
    """Per-channel dimensions the direct (non-minimal) conversion would produce."""
    dims = spec.dims
    width = dims.n + dims.m + dims.p
    if isinstance(spec, NDSSpec):
        width += dims.n
    return [width] * dims.K


def convert_spec(spec, target, minimal=False, rank_tol=None):
    """Convert along the reachable routes; unreachable pairs raise UsageError."""
    target = target.upper().replace('-', '')
    source = spec.kind
    if target not in REACHABILITY.get(source, ()):
        raise UsageError(f'no conversion from {source} to {target}')
    if minimal and source != 'DDE':
        raise UsageError('minimal reduction applies to DDE sources only')

    if source == 'DDE':
        if target == 'PIE' and not minimal:
            return dde_to_pie(spec)
        ddf = minimal_ddf_from_dde(spec, rank_tol) if minimal else dde_to_ddf(spec)
    elif source == 'NDS':
        ddf = nds_to_ddf(spec)
    elif source == 'ODEPDE':
        ddf = odepde_to_ddf(spec) if target == 'DDF' else spec
    else:
        ddf = spec

    if target == 'DDF':
        return ddf
    if target == 'ODEPDE':
        return ddf_to_odepde(ddf)
    return ddf_to_pie(ddf)


__all__ = [
    'REACHABILITY', 'ConversionScratch', 'PIESpec', 'SOFPlant',
    'dde_to_ddf', 'nds_to_ddf', 'ddf_to_odepde', 'odepde_to_ddf',
    'ddf_history_to_odepde', 'odepde_history_to_ddf',
    'ddf_to_pie', 'dde_to_pie', 'minimal_ddf_from_dde', 'sof_network_to_ddf',
    'channel_dimensions', 'naive_channel_dimensions', 'convert_spec',
]

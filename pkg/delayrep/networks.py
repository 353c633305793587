"""
Builders for three networked delay systems.

    UAV network     N agents with process, input and output delays
    SOF network     UAVs under static output feedback u = F y with input delay
    shower network  N users sharing a water supply, one state delay per user

Each builder returns a spec the converters and simulators accept. The
residual helpers substitute a simulated trajectory back into the model
equations the specs were built from.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .convert import SOFPlant, sof_network_to_ddf
from .exceptions import DimensionError, UsageError
from .inputs import HistoryFunction
from .simulate import SignalBuffer, as_history
from .specs import DDESpec, DDFSpec, Dims

logger = logging.getLogger(__name__)


def _blocks(values, shape, name):
    out = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in values)
    for i, v in enumerate(out):
        if v.shape != shape:
            raise DimensionError(f'{name}[{i + 1}] is {v.shape}, expected {shape}')
    return out


def _positive(values, name, N):
    values = tuple(float(t) for t in values)
    if len(values) != N:
        raise DimensionError(f'{name} has {len(values)} delays for N={N}')
    if any(t <= 0 for t in values):
        raise UsageError(f'{name} delays must be positive: {values}')
    return values


@dataclass(frozen=True, eq=False)
class UAVParams:
    """Per-agent blocks of the UAV network.

    x_i' = a_i x_i + sum_{j != i} a_ij x_j + b1_i w(t - tau_process_i) + b2_i u(t - tau_input_i)
    z    = C1 x + D12 u
    y_i  = c2_i x_i(t - tau_output_i) + d21_i w(t - tau_output_i)

    `d22` (r x p per agent) is only used by the static-output-feedback variant.
    """
    a: tuple
    coupling: np.ndarray
    b1: tuple
    b2: tuple
    c2: tuple
    d21: tuple
    C1: np.ndarray
    D12: np.ndarray
    tau_process: tuple
    tau_input: tuple
    tau_output: tuple
    d22: tuple = None

    def __post_init__(self):
        N = len(self.a)
        if N < 1:
            raise UsageError('a UAV network needs at least one agent')
        a = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in self.a)
        n = a[0].shape[0]
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_('a', _blocks(a, (n, n), 'a'))
        coupling = np.asarray(self.coupling, dtype=float)
        if coupling.shape != (N, N, n, n):
            raise DimensionError(f'coupling is {coupling.shape}, expected {(N, N, n, n)}')
        set_('coupling', coupling)
        b1 = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in self.b1)
        b2 = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in self.b2)
        c2 = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in self.c2)
        m, p, r = b1[0].shape[1], b2[0].shape[1], c2[0].shape[0]
        set_('b1', _blocks(b1, (n, m), 'b1'))
        set_('b2', _blocks(b2, (n, p), 'b2'))
        set_('c2', _blocks(c2, (r, n), 'c2'))
        set_('d21', _blocks(self.d21, (r, m), 'd21'))
        C1 = np.atleast_2d(np.asarray(self.C1, dtype=float))
        if C1.shape[1] != n * N:
            raise DimensionError(f'C1 has {C1.shape[1]} columns, expected {n * N}')
        set_('C1', C1)
        D12 = np.atleast_2d(np.asarray(self.D12, dtype=float))
        if D12.shape != (C1.shape[0], p):
            raise DimensionError(f'D12 is {D12.shape}, expected {(C1.shape[0], p)}')
        set_('D12', D12)
        for name in ('tau_process', 'tau_input', 'tau_output'):
            set_(name, _positive(getattr(self, name), name, N))
        if self.d22 is not None:
            set_('d22', _blocks(self.d22, (r, p), 'd22'))

    @property
    def N(self):
        return len(self.a)

    @property
    def shape(self):
        """(n, m, p, q, r) per agent."""
        return (self.a[0].shape[0], self.b1[0].shape[1], self.b2[0].shape[1],
                self.C1.shape[0], self.c2[0].shape[0])

    def A0(self):
        N = self.N
        return np.block([
            [self.a[i] if i == j else self.coupling[i, j] for j in range(N)] for i in range(N)
        ])


def _unit(N, i):
    e = np.zeros((N, 1))
    e[i] = 1.0
    return e


def _merged(delays):
    """Sorted distinct delays and the merged index of every input delay."""
    unique = sorted(set(delays))
    if len(unique) < len(delays):
        logger.info('merging %d coinciding delays into %d', len(delays), len(unique))
    return unique, [unique.index(t) for t in delays]


def _check_channel_choice(params):
    n, m, p, _, _ = params.shape
    if n >= m or n >= p:
        logger.warning(
            'UAV state dimension n=%d is not below m=%d and p=%d; '
            'delaying b1 w and b2 u is no longer the smaller channel choice', n, m, p)


def build_uav_dde(params):
    """K = 3N delays: process delays first, then input delays, then output delays."""
    N = params.N
    n, m, p, q, r = params.shape
    delays, index = _merged(params.tau_process + params.tau_input + params.tau_output)
    K = len(delays)
    blocks = {
        'B1': [np.zeros((n * N, m)) for _ in range(K)],
        'B2': [np.zeros((n * N, p)) for _ in range(K)],
        'C2': [np.zeros((r * N, n * N)) for _ in range(K)],
        'D21': [np.zeros((r * N, m)) for _ in range(K)],
    }
    for i in range(N):
        e = _unit(N, i)
        blocks['B1'][index[i]] += np.kron(e, params.b1[i])
        blocks['B2'][index[N + i]] += np.kron(e, params.b2[i])
        blocks['C2'][index[2 * N + i]] += np.kron(e @ e.T, params.c2[i])
        blocks['D21'][index[2 * N + i]] += np.kron(e, params.d21[i])
    dde = DDESpec.build(
        Dims(n=n * N, m=m, p=p, q=q, r=r * N, K=K),
        delays,
        matrices={'A0': params.A0(), 'C10': params.C1, 'D12': params.D12},
        delayed=blocks,
    )
    logger.info('UAV DDE: N=%d, %d delays, state dimension %d', N, K, n * N)
    return dde


def build_uav_ddf(params):
    """One channel per delay carrying only b1_i w, b2_i u or the output of agent i."""
    _check_channel_choice(params)
    N = params.N
    n, m, p, q, r = params.shape
    nx, ny = n * N, r * N

    # (delay, Cr, Br1, Br2, Bv columns, D2v columns) before merging
    raw = []
    for i in range(N):
        e = _unit(N, i)
        raw.append((params.tau_process[i], np.zeros((n, nx)), params.b1[i], np.zeros((n, p)),
                    np.kron(e, np.eye(n)), np.zeros((ny, n))))
    for i in range(N):
        e = _unit(N, i)
        raw.append((params.tau_input[i], np.zeros((n, nx)), np.zeros((n, m)), params.b2[i],
                    np.kron(e, np.eye(n)), np.zeros((ny, n))))
    for i in range(N):
        e = _unit(N, i)
        raw.append((params.tau_output[i], np.kron(e.T, params.c2[i]), params.d21[i],
                    np.zeros((r, p)), np.zeros((nx, r)), np.kron(e, np.eye(r))))

    delays, index = _merged([entry[0] for entry in raw])
    groups = [[entry for entry, k in zip(raw, index) if k == g] for g in range(len(delays))]
    channel_dims = [sum(entry[1].shape[0] for entry in group) for group in groups]
    nv = sum(channel_dims)
    offsets = np.concatenate([[0], np.cumsum(channel_dims)]).astype(int)
    eye = np.eye(nv)
    ordered = [entry for group in groups for entry in group]
    ddf = DDFSpec.build(
        Dims(n=nx, m=m, p=p, q=q, r=ny, channel_dims=tuple(channel_dims), nv=nv),
        delays,
        matrices={
            'A0': params.A0(), 'C1': params.C1, 'D12': params.D12,
            'Bv': np.hstack([entry[4] for entry in ordered]),
            'D2v': np.hstack([entry[5] for entry in ordered]),
        },
        channels={
            'Cr': [np.vstack([e[1] for e in group]) for group in groups],
            'Br1': [np.vstack([e[2] for e in group]) for group in groups],
            'Br2': [np.vstack([e[3] for e in group]) for group in groups],
            'Cv': [eye[:, offsets[g]:offsets[g + 1]] for g in range(len(groups))],
        },
        provenance=('build_uav_ddf',),
    )
    logger.info('UAV DDF: N=%d, %d channels, sum p_i = %d', N, len(delays), nv)
    return ddf


def sof_plant(params):
    """The static-output-feedback plant: no process or output delay, input delays tau_input."""
    if params.d22 is None:
        raise DimensionError('the SOF network needs d22 blocks')
    N = params.N
    n, m, p, q, r = params.shape
    delays, index = _merged(params.tau_input)
    B2 = [np.zeros((n * N, p)) for _ in delays]
    D22 = [np.zeros((r * N, p)) for _ in delays]
    for i in range(N):
        e = _unit(N, i)
        B2[index[i]] += np.kron(e, params.b2[i])
        D22[index[i]] += np.kron(e, params.d22[i])
    return SOFPlant(
        A0=params.A0(), B1=np.vstack(params.b1), C1=params.C1, D12=params.D12,
        C2=scipy.linalg.block_diag(*params.c2), D21=np.vstack(params.d21),
        B2=tuple(B2), D22=tuple(D22), delays=tuple(delays),
    )


def build_sof_network(params, F):
    """DDF of the UAV plant closed by u = F y, F of shape (p, r*N)."""
    return sof_network_to_ddf(sof_plant(params), F)


def random_uav_params(N, n=1, m=2, p=2, r=1, seed=0, q=2, coupling=0.1):
    """Reproducible UAV parameters with stable agents, weak coupling and distinct delays."""
    rng = np.random.default_rng(seed)
    a = [-np.eye(n) * (1.0 + rng.uniform(0.0, 1.0)) + 0.1 * rng.standard_normal((n, n))
         for _ in range(N)]
    links = coupling / max(N, 1) * rng.standard_normal((N, N, n, n))
    for i in range(N):
        links[i, i] = 0.0
    delays = np.round(rng.uniform(0.2, 1.0, size=3 * N), 3)
    return UAVParams(
        a=a, coupling=links,
        b1=[rng.standard_normal((n, m)) for _ in range(N)],
        b2=[rng.standard_normal((n, p)) for _ in range(N)],
        c2=[rng.standard_normal((r, n)) for _ in range(N)],
        d21=[rng.standard_normal((r, m)) for _ in range(N)],
        C1=rng.standard_normal((q, n * N)),
        D12=rng.standard_normal((q, p)),
        tau_process=delays[:N], tau_input=delays[N:2 * N], tau_output=delays[2 * N:],
        d22=[0.5 * rng.standard_normal((r, p)) for _ in range(N)],
    )


@dataclass(frozen=True, eq=False)
class ShowerParams:
    """N users; alpha_i feedback gains, gamma_ij cross coupling, tau_i per-user delay."""
    N: int
    alpha: np.ndarray = None
    gamma: np.ndarray = None
    tau: tuple = None
    w_level: float = None

    def __post_init__(self):
        N = int(self.N)
        if N < 1:
            raise UsageError('the shower network needs at least one user')
        alpha = np.ones(N) if self.alpha is None else np.asarray(self.alpha, dtype=float).reshape(N)
        gamma = np.full((N, N), 1.0 / N) if self.gamma is None else np.asarray(self.gamma, dtype=float)
        if gamma.shape != (N, N):
            raise DimensionError(f'gamma is {gamma.shape}, expected {(N, N)}')
        tau = tuple(float(i + 1) for i in range(N)) if self.tau is None else tuple(float(t) for t in self.tau)
        if len(tau) != N:
            raise DimensionError(f'{len(tau)} delays for N={N}')
        object.__setattr__(self, 'N', N)
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'gamma', gamma)
        object.__setattr__(self, 'tau', tau)
        object.__setattr__(self, 'w_level', float(N if self.w_level is None else self.w_level))

    def Gamma(self):
        G = self.gamma * self.alpha[None, :]
        np.fill_diagonal(G, -self.alpha)
        return G


def _shower_common(params):
    N = params.N
    I, Z = np.eye(N), np.zeros((N, N))
    G = params.Gamma()
    ones = np.ones((1, N))
    return {
        'A0': np.block([[Z, I], [Z, Z]]),
        'B1': np.vstack([-I, -G]),
        'B2': np.vstack([Z, I]),
        'C1': np.block([[ones, np.zeros((1, N))], [np.zeros((1, 2 * N))]]),
        'D12': np.vstack([np.zeros((1, N)), 0.1 * ones]),
    }


def build_shower_dde(params):
    """x = [T_1; T_2] (tap positions, temperatures); A_i = [[0, 0], [0, Gamma diag(e_i)]]."""
    N = params.N
    common = _shower_common(params)
    G = params.Gamma()
    A = []
    for i in range(N):
        block = np.zeros((2 * N, 2 * N))
        block[N:, N:] = G @ np.diag(_unit(N, i).ravel())
        A.append(block)
    return DDESpec.build(
        Dims(n=2 * N, m=N, p=N, q=2, r=0, K=N),
        params.tau,
        matrices={'A0': common['A0'], 'B1': common['B1'], 'B2': common['B2'],
                  'C10': common['C1'], 'D12': common['D12']},
        delayed={'A': A},
    )


def build_shower_ddf(params):
    """Channel i carries the temperature T_2i; v collects the delayed temperatures."""
    N = params.N
    common = _shower_common(params)
    eye = np.eye(2 * N)
    return DDFSpec.build(
        Dims(n=2 * N, m=N, p=N, q=2, r=0, channel_dims=(1,) * N, nv=N),
        params.tau,
        matrices={**common, 'Bv': np.vstack([np.zeros((N, N)), params.Gamma()])},
        channels={
            'Cr': [eye[N + i:N + i + 1] for i in range(N)],
            'Cv': [_unit(N, i) for i in range(N)],
        },
        provenance=('build_shower_ddf',),
    )


# residual oracles


def _trajectory_buffer(values, dt, history=None):
    buf = SignalBuffer(values.shape[1], dt, values.shape[0] - 1, history)
    for row in values:
        buf.push(row)
    return buf


def shower_residual(params, traj, x0=None, w=None, u=None):
    """Per-step residual of x_{k+1} - x_k - int_{t_k}^{t_{k+1}} x'(t) dt, Simpson in time.

    The right-hand side is the shower model written out user by user. Delayed and
    midpoint values are read from the trajectory by local cubic interpolation.
    """
    N = params.N
    h = traj.dt
    lo = -max(params.tau)
    xbuf = _trajectory_buffer(traj.x, h, as_history(x0, 2 * N, lo))
    wbuf = _trajectory_buffer(traj.w, h, HistoryFunction.zeros(N, lo))
    ubuf = _trajectory_buffer(traj.u, h, HistoryFunction.zeros(N, lo))

    def signal(buf, desc, t):
        return buf(t)[0] if desc is None else desc.evaluate(t, N)

    def rhs(t):
        x = xbuf(t)[0]
        T2 = x[N:]
        wt, ut = signal(wbuf, w, t), signal(ubuf, u, t)
        delayed = np.array([xbuf(t - tau)[0][N + j] for j, tau in enumerate(params.tau)])
        dT1 = T2 - wt
        dT2 = np.zeros(N)
        for i in range(N):
            dT2[i] = -params.alpha[i] * (delayed[i] - wt[i]) + ut[i]
            for j in range(N):
                if j != i:
                    dT2[i] += params.gamma[i, j] * params.alpha[j] * (delayed[j] - wt[j])
        return np.concatenate([dT1, dT2])

    out = np.zeros(traj.t.size - 1)
    for k in range(traj.t.size - 1):
        t = traj.t[k]
        integral = (h / 6.0) * (rhs(t) + 4.0 * rhs(t + 0.5 * h) + rhs(t + h))
        out[k] = np.max(np.abs(traj.x[k + 1] - traj.x[k] - integral))
    return out


def sof_recursion_residual(traj, plant, F):
    """Residuals of y = C2 x + D21 w + sum_i D22_i F y(t - tau_i) and z = C1 x + D12 F y.

    y(t) is taken as zero for t <= 0. Returns (y residual, z residual), one row per sample.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    t = traj.t
    ybuf = _trajectory_buffer(traj.y, traj.dt, HistoryFunction.zeros(traj.y.shape[1], -max(plant.delays)))
    recursion = np.zeros_like(traj.y)
    for tau, D22 in zip(plant.delays, plant.D22):
        recursion += ybuf(t - tau) @ (D22 @ F).T
    y_res = traj.y - (traj.x @ plant.C2.T + traj.w @ plant.D21.T + recursion)
    z_res = traj.z - (traj.x @ plant.C1.T + traj.y @ (plant.D12 @ F).T)
    return y_res, z_res

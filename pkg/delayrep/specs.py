"""
Coefficient bundles for the delay-system representations.

    DDESpec     delay-differential equation
    NDSSpec     neutral-type system (DDE plus delayed-derivative terms)
    DDFSpec     differential-difference formulation
    ODEPDESpec  the DDF read as an ODE coupled to unit-length transport PDEs

Matrices left out of a ``build`` call are zero of the conforming shape.
Arrays are stored read-only; specs are never mutated after construction.
"""
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import ClassVar

import numpy as np

from .exceptions import DimensionError
from .kernels import PolyKernel, block_kernel


@dataclass(frozen=True)
class Dims:
    n: int
    m: int
    p: int
    q: int
    r: int
    K: int = 0
    channel_dims: tuple = ()
    nv: int = 0

    def size(self, symbol, pi=None):
        if symbol == 'pi':
            return pi
        return getattr(self, symbol)

    @property
    def total_channel_dim(self):
        return int(sum(self.channel_dims))


# Shapes as (row symbol, column symbol).
DDE_INSTANT = {
    'A0': ('n', 'n'), 'B1': ('n', 'm'), 'B2': ('n', 'p'),
    'C10': ('q', 'n'), 'D11': ('q', 'm'), 'D12': ('q', 'p'),
    'C20': ('r', 'n'), 'D21': ('r', 'm'), 'D22': ('r', 'p'),
}
DDE_DELAYED = {
    'A': ('n', 'n'), 'B1': ('n', 'm'), 'B2': ('n', 'p'),
    'C1': ('q', 'n'), 'D11': ('q', 'm'), 'D12': ('q', 'p'),
    'C2': ('r', 'n'), 'D21': ('r', 'm'), 'D22': ('r', 'p'),
}
NDS_NEUTRAL = {'E': ('n', 'n'), 'E1': ('q', 'n'), 'E2': ('r', 'n')}

# Delayed blocks as they sit in the stacked per-delay matrix.
DDE_LAYOUT = (('A', 'B1', 'B2'), ('C1', 'D11', 'D12'), ('C2', 'D21', 'D22'))
NDS_LAYOUT = (('A', 'B1', 'B2', 'E'), ('C1', 'D11', 'D12', 'E1'), ('C2', 'D21', 'D22', 'E2'))
INSTANT_LAYOUT = (('A0', 'B1', 'B2'), ('C10', 'D11', 'D12'), ('C20', 'D21', 'D22'))

DDF_INSTANT = {
    'A0': ('n', 'n'), 'B1': ('n', 'm'), 'B2': ('n', 'p'),
    'C1': ('q', 'n'), 'D11': ('q', 'm'), 'D12': ('q', 'p'),
    'C2': ('r', 'n'), 'D21': ('r', 'm'), 'D22': ('r', 'p'),
    'Bv': ('n', 'nv'), 'D1v': ('q', 'nv'), 'D2v': ('r', 'nv'),
}
DDF_CHANNEL = {
    'Cr': ('pi', 'n'), 'Br1': ('pi', 'm'), 'Br2': ('pi', 'p'),
    'Drv': ('pi', 'nv'), 'Cv': ('nv', 'pi'),
}

# Blocks whose nonzero value makes a delayed copy of w (resp. u) enter the dynamics.
DELAYED_W_BLOCKS = ('B1', 'D11', 'D21')
DELAYED_U_BLOCKS = ('B2', 'D12', 'D22')


def kernel_name(name):
    return f'{name}d'


def _frozen(array):
    array = np.atleast_2d(np.array(array, dtype=float))
    array.setflags(write=False)
    return array


def _zeros(dims, shape_symbols, pi=None):
    rows, cols = shape_symbols
    return np.zeros((dims.size(rows, pi), dims.size(cols, pi)))


def _fill(table, given, dims, pi=None):
    given = dict(given or {})
    unknown = set(given) - set(table)
    if unknown:
        raise DimensionError(f'unknown matrix names: {sorted(unknown)}')
    out = {}
    for name, symbols in table.items():
        value = given.get(name)
        if value is None:
            value = _zeros(dims, symbols, pi)
        out[name] = _frozen(value) if np.size(value) else _frozen(_zeros(dims, symbols, pi))
    return MappingProxyType(out)


def _per_index(given, count):
    """Normalize {name: [value per index]} into [{name: value}] of length count."""
    given = dict(given or {})
    out = [dict() for _ in range(count)]
    for name, values in given.items():
        values = list(values)
        if len(values) != count:
            raise DimensionError(f'{name} has {len(values)} entries, expected {count}')
        for i, value in enumerate(values):
            if value is not None:
                out[i][name] = value
    return out


def _kernels(table, given, dims, delays, pi_list=None):
    out = []
    for i, tau in enumerate(delays):
        pi = None if pi_list is None else pi_list[i]
        per = {}
        for name, (rows, cols) in table.items():
            kname = kernel_name(name)
            shape = (dims.size(rows, pi), dims.size(cols, pi))
            k = given[i].get(kname)
            if k is None:
                k = PolyKernel.zeros(*shape, domain=(-tau, 0.0))
            elif not isinstance(k, PolyKernel):
                raise DimensionError(f'{kname}[{i}] must be a PolyKernel')
            per[kname] = k
        out.append(MappingProxyType(per))
    return tuple(out)


def _arrays_equal(a, b):
    if set(a) != set(b):
        return False
    for key in a:
        x, y = a[key], b[key]
        if isinstance(x, PolyKernel):
            if x != y:
                return False
        elif not np.array_equal(x, y):
            return False
    return True


class _SpecEquality:
    def _items(self):
        raise NotImplementedError

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if self.dims != other.dims or tuple(self.delays) != tuple(other.delays):
            return False
        mine, theirs = self._items(), other._items()
        if len(mine) != len(theirs):
            return False
        return all(_arrays_equal(a, b) for a, b in zip(mine, theirs))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DDESpec(_SpecEquality):
    dims: Dims
    delays: tuple
    matrices: MappingProxyType
    delayed: tuple
    kernels: tuple
    kind: ClassVar[str] = 'DDE'
    delayed_table: ClassVar[dict] = DDE_DELAYED
    layout: ClassVar[tuple] = DDE_LAYOUT

    @classmethod
    def build(cls, dims, delays, matrices=None, delayed=None, kernels=None):
        """Build from {name: matrix}, {name: [matrix per delay]}, {kernel name: [kernel per delay]}."""
        delays = tuple(float(t) for t in delays)
        if dims.K != len(delays):
            dims = replace(dims, K=len(delays))
        per_delay = _per_index(delayed, len(delays))
        per_kernel = _per_index(kernels, len(delays))
        return cls(
            dims=dims,
            delays=delays,
            matrices=_fill(DDE_INSTANT, matrices, dims),
            delayed=tuple(_fill(cls.delayed_table, d, dims) for d in per_delay),
            kernels=_kernels(cls.delayed_table, per_kernel, dims, delays),
        )

    def _items(self):
        return [self.matrices, *self.delayed, *self.kernels]

    def delayed_block(self, i):
        """The stacked constant block multiplying the delayed signals at delay i."""
        return np.block([[self.delayed[i][name] for name in row] for row in self.layout])

    def kernel_block(self, i):
        """The stacked distributed kernel at delay i, on [-tau_i, 0]."""
        return block_kernel(
            [[self.kernels[i][kernel_name(name)] for name in row] for row in self.layout],
            domain=(-self.delays[i], 0.0),
        )

    def instant_block(self):
        return np.block([[self.matrices[name] for name in row] for row in INSTANT_LAYOUT])

    def _any_delayed(self, names):
        for i in range(self.dims.K):
            for name in names:
                if np.any(self.delayed[i][name]) or not self.kernels[i][kernel_name(name)].is_zero():
                    return True
        return False

    def needs_smooth_w(self):
        return self._any_delayed(DELAYED_W_BLOCKS)

    def needs_smooth_u(self):
        return self._any_delayed(DELAYED_U_BLOCKS)

    @property
    def max_delay(self):
        return max(self.delays, default=0.0)


@dataclass(frozen=True, eq=False)
class NDSSpec(DDESpec):
    kind: ClassVar[str] = 'NDS'
    delayed_table: ClassVar[dict] = {**DDE_DELAYED, **NDS_NEUTRAL}
    layout: ClassVar[tuple] = NDS_LAYOUT

    def embedded_dde(self):
        """The DDE obtained by dropping every neutral term."""
        delayed = {name: [self.delayed[i][name] for i in range(self.dims.K)] for name in DDE_DELAYED}
        kernels = {
            kernel_name(name): [self.kernels[i][kernel_name(name)] for i in range(self.dims.K)]
            for name in DDE_DELAYED
        }
        return DDESpec.build(self.dims, self.delays, dict(self.matrices), delayed, kernels)


@dataclass(frozen=True, eq=False)
class DDFSpec(_SpecEquality):
    dims: Dims
    delays: tuple
    matrices: MappingProxyType
    channels: tuple
    kernels: tuple
    provenance: tuple = field(default=())
    kind: ClassVar[str] = 'DDF'

    @classmethod
    def build(cls, dims, delays, matrices=None, channels=None, Cvd=None, provenance=()):
        """Build from {name: matrix}, {channel name: [matrix per channel]}, [Cvd kernel per channel]."""
        delays = tuple(float(t) for t in delays)
        channel_dims = tuple(int(d) for d in dims.channel_dims)
        if len(channel_dims) != len(delays):
            raise DimensionError(
                f'{len(channel_dims)} channel dims for {len(delays)} delays'
            )
        dims = replace(dims, K=len(delays), channel_dims=channel_dims)
        per_channel = _per_index(channels, len(delays))
        kernels = []
        Cvd = list(Cvd) if Cvd is not None else [None] * len(delays)
        if len(Cvd) != len(delays):
            raise DimensionError(f'{len(Cvd)} Cvd kernels for {len(delays)} delays')
        for i, (tau, k) in enumerate(zip(delays, Cvd)):
            if k is None:
                k = PolyKernel.zeros(dims.nv, channel_dims[i], domain=(-tau, 0.0))
            kernels.append(k)
        return cls(
            dims=dims,
            delays=delays,
            matrices=_fill(DDF_INSTANT, matrices, dims),
            channels=tuple(
                _fill(DDF_CHANNEL, c, dims, pi) for c, pi in zip(per_channel, channel_dims)
            ),
            kernels=tuple(kernels),
            provenance=tuple(provenance),
        )

    def _items(self):
        return [self.matrices, *self.channels, *({'Cvd': k} for k in self.kernels)]

    def hat_Cv(self, i):
        """C_vi plus the integral of the distributed kernel over [-tau_i, 0]."""
        return self.channels[i]['Cv'] + self.kernels[i].integral()

    def loop_matrix(self):
        """I - sum_i hat(C_vi) D_rvi; its inverse resolves the v/r algebraic loop."""
        nv = self.dims.nv
        total = np.zeros((nv, nv))
        for i in range(self.dims.K):
            total += self.hat_Cv(i) @ self.channels[i]['Drv']
        return np.eye(nv) - total

    def channel_block(self, i):
        """[C_ri B_r1i B_r2i] for channel i."""
        c = self.channels[i]
        return np.hstack([c['Cr'], c['Br1'], c['Br2']])

    def needs_smooth_w(self):
        return any(np.any(c['Br1']) for c in self.channels)

    def needs_smooth_u(self):
        return any(np.any(c['Br2']) for c in self.channels)

    def as_kind(self, target_cls):
        return target_cls(
            dims=self.dims, delays=self.delays, matrices=self.matrices,
            channels=self.channels, kernels=self.kernels, provenance=self.provenance,
        )

    @property
    def max_delay(self):
        return max(self.delays, default=0.0)


@dataclass(frozen=True, eq=False)
class ODEPDESpec(DDFSpec):
    """Same matrices as the DDF; the channels are read as transport PDEs on [-1, 0]."""
    kind: ClassVar[str] = 'ODEPDE'


SPEC_TYPES = {cls.kind: cls for cls in (DDESpec, NDSSpec, DDFSpec, ODEPDESpec)}


# Operator slots of a PIE and the (finite, function) shape of each as
# ((rows, fn rows), (cols, fn cols)); 'P' stands for the total channel dimension.
PIE_OPERATORS = {
    'T': (('n', 'P'), ('n', 'P')),
    'A': (('n', 'P'), ('n', 'P')),
    'B1': (('n', 'P'), ('m', None)),
    'B2': (('n', 'P'), ('p', None)),
    'C1': (('q', None), ('n', 'P')),
    'C2': (('r', None), ('n', 'P')),
    'D11': (('q', None), ('m', None)),
    'D12': (('q', None), ('p', None)),
    'D21': (('r', None), ('m', None)),
    'D22': (('r', None), ('p', None)),
    'BT1': (('n', 'P'), ('m', None)),
    'BT2': (('n', 'P'), ('p', None)),
}


def pie_operator_dims(dims, name):
    """Expected (n_out, n_in, p_out, p_in) of PIE operator `name`."""
    (ro, fo), (ci, fi) = PIE_OPERATORS[name]
    total = dims.total_channel_dim
    return (
        dims.size(ro), dims.size(ci),
        total if fo else 0, total if fi else 0,
    )


@dataclass(frozen=True, eq=False)
class PIESpec:
    """T x' + BT1 w' + BT2 u' = A x + B1 w + B2 u, z = C1 x + D11 w + D12 u, y = C2 x + D21 w + D22 u.

    The state is (x, d/ds phi_1, ..., d/ds phi_K) on R^n x L2[-1, 0]^(sum p_i).
    """
    dims: Dims
    delays: tuple
    operators: MappingProxyType
    scratch: object = field(default=None, compare=False)
    kind: ClassVar[str] = 'PIE'

    @classmethod
    def build(cls, dims, delays, operators, scratch=None):
        missing = set(PIE_OPERATORS) - set(operators)
        if missing:
            raise DimensionError(f'PIE is missing operators {sorted(missing)}')
        ordered = {name: operators[name] for name in PIE_OPERATORS}
        return cls(
            dims=dims, delays=tuple(float(t) for t in delays),
            operators=MappingProxyType(ordered), scratch=scratch,
        )

    def __getattr__(self, name):
        # T, A, B1, ... read straight from the operator table.
        if name in PIE_OPERATORS:
            return self.operators[name]
        raise AttributeError(name)

    def __eq__(self, other):
        if not isinstance(other, PIESpec):
            return NotImplemented
        return (
            self.dims == other.dims and tuple(self.delays) == tuple(other.delays)
            and all(self.operators[k] == other.operators[k] for k in PIE_OPERATORS)
        )

    __hash__ = None

    @property
    def max_delay(self):
        return max(self.delays, default=0.0)

    def needs_smooth_w(self):
        return not self.operators['BT1'].is_zero()

    def needs_smooth_u(self):
        return not self.operators['BT2'].is_zero()

    def channel_slices(self):
        """Offsets of each channel inside the stacked function part."""
        out, start = [], 0
        for pi in self.dims.channel_dims:
            out.append(slice(start, start + pi))
            start += pi
        return out


SPEC_TYPES['PIE'] = PIESpec

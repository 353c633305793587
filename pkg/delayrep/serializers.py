"""
File formats: JSON specs and trajectory CSV.

A spec file looks like

    {"type": "DDE", "dims": {"n": 1, "m": 0, "p": 0, "q": 0, "r": 0, "K": 1},
     "delays": [1.0],
     "matrices": {"A0": [[-1.0]], "A1": [[0.5]]},
     "kernels": {"Ad1": [{"degree": 0, "coeffs": [[0.1]]}, {"degree": 2, "coeffs": [[0.3]]}]}}

Matrices are row-major nested lists in one flat map. Per-delay blocks carry a
1-based delay index after the block name (A1, B12, D111); when that reading is
ambiguous the index is separated by an underscore (E_11). Kernels list their
nonzero monomial terms; two-variable kernels give the degree as [a, b] for
s**a * theta**b. Kernel domains follow from the delays. Absent matrices and
kernels are zero. PIE files replace matrices and kernels by an "operators" map
of {"P", "Q1", "Q2", "R0", "R1", "R2"} blocks.

Output is canonical: keys sorted, two-space indent, floats in shortest
round-trip form, zero entries omitted, so write -> read -> write is
byte-identical.
"""
import csv
import json
import logging
from pathlib import Path

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

from .conf import resolve
from .exceptions import DimensionError, UsageError
from .kernels import PolyKernel
from .piops import UNIT, PIOperator
from .simulate import Trajectory
from .specs import (
    DDE_INSTANT, DDF_CHANNEL, DDF_INSTANT, PIE_OPERATORS, SPEC_TYPES, DDESpec, DDFSpec, Dims,
    PIESpec, kernel_name, pie_operator_dims,
)

logger = logging.getLogger(__name__)

PI_BLOCKS = ('Q1', 'Q2', 'R0', 'R1', 'R2')


class ArrayEncoder(DjangoJSONEncoder):
    """DjangoJSONEncoder that also understands numpy scalars."""

    def default(self, o):
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        return super().default(o)


def _round17(x):
    # 17 significant digits always round-trip a double exactly.
    return float(format(float(x), '.17g'))


# matrices and kernels


def encode_matrix(array):
    return [[_round17(x) for x in row] for row in np.atleast_2d(array)]


def decode_matrix(value, name):
    """Nested row-major list -> 2-d array; an empty list stands for the zero matrix."""
    try:
        array = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionError(f'{name}: malformed matrix: {exc}') from exc
    if array.size == 0:
        return None
    if array.ndim != 2:
        raise DimensionError(f'{name}: expected a nested list of rows, got {array.ndim} levels')
    return array


def encode_kernel(kernel):
    c = kernel.trimmed().coeffs
    if kernel.nvars == 1:
        return [{'degree': a, 'coeffs': encode_matrix(c[a])} for a in range(c.shape[0]) if np.any(c[a])]
    return [
        {'degree': [a, b], 'coeffs': encode_matrix(c[a, b])}
        for a in range(c.shape[0]) for b in range(c.shape[1]) if np.any(c[a, b])
    ]


def _term_degree(term, nvars, name):
    degree = term.get('degree') if isinstance(term, dict) else None
    degree = [degree] if nvars == 1 and not isinstance(degree, list) else degree
    try:
        degree = tuple(int(d) for d in degree)
    except (TypeError, ValueError):
        raise DimensionError(f'{name}: bad kernel term degree {term!r}') from None
    if len(degree) != nvars or min(degree) < 0:
        raise DimensionError(f'{name}: kernel term degree {list(degree)} needs {nvars} entries >= 0')
    return degree


def decode_kernel(terms, name, shape, domain, nvars=1):
    """List of {"degree", "coeffs"} terms -> PolyKernel of the given shape."""
    if not isinstance(terms, list):
        raise DimensionError(f'{name}: kernel must be a list of terms')
    parsed = []
    for term in terms:
        degree = _term_degree(term, nvars, name)
        matrix = decode_matrix(term.get('coeffs'), name)
        matrix = np.zeros(shape) if matrix is None else matrix
        if matrix.shape != tuple(shape):
            raise DimensionError(
                f'{name}: term of degree {list(degree)} is {matrix.shape}, expected {tuple(shape)}'
            )
        parsed.append((degree, matrix))
    top = max((max(d) for d, _ in parsed), default=0)
    coeffs = np.zeros((top + 1,) * nvars + tuple(shape))
    for degree, matrix in parsed:
        coeffs[degree] += matrix
    return PolyKernel(coeffs, nvars=nvars, domain=domain)


# indexed names


def split_indexed(key, names, count):
    """'B12' -> ('B1', 2) for names containing 'B1'; None when the key does not parse."""
    base, sep, tail = key.rpartition('_')
    if sep:
        candidates = [(base, tail)]
    else:
        candidates = [(key[:len(n)], key[len(n):]) for n in sorted(names, key=len, reverse=True)]
    for name, tail in candidates:
        if name in names and tail.isdigit() and 1 <= int(tail) <= count:
            return name, int(tail)
    return None


def indexed_key(name, index, names, count, reserved=()):
    key = f'{name}{index}'
    if key in reserved or split_indexed(key, names, count) != (name, index):
        key = f'{name}_{index}'
    return key


# dims


def _encode_dims(spec):
    dims = spec.dims
    out = {'n': dims.n, 'm': dims.m, 'p': dims.p, 'q': dims.q, 'r': dims.r, 'K': dims.K}
    if not isinstance(spec, DDESpec):
        out['p_i'] = list(dims.channel_dims)
        out['n_v'] = dims.nv
    return out


def _decode_dims(obj, delays):
    if not isinstance(obj, dict):
        raise DimensionError('dims must be an object')
    try:
        dims = Dims(
            n=int(obj['n']), m=int(obj.get('m', 0)), p=int(obj.get('p', 0)),
            q=int(obj.get('q', 0)), r=int(obj.get('r', 0)), K=int(obj.get('K', len(delays))),
            channel_dims=tuple(int(d) for d in obj.get('p_i', ())), nv=int(obj.get('n_v', 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionError(f'malformed dims: {exc}') from exc
    if dims.K != len(delays):
        raise DimensionError(f'dims.K is {dims.K} but {len(delays)} delays are listed')
    if min(dims.n, dims.m, dims.p, dims.q, dims.r, dims.nv) < 0:
        raise DimensionError('dimensions must be nonnegative')
    return dims


# writing


def _put_matrix(out, key, value):
    if np.any(value):
        out[key] = encode_matrix(value)


def _put_kernel(out, key, kernel):
    if not kernel.is_zero():
        out[key] = encode_kernel(kernel)


def _dde_body(spec):
    K = spec.dims.K
    table = spec.delayed_table
    knames = [kernel_name(name) for name in table]
    matrices, kernels = {}, {}
    for name, value in spec.matrices.items():
        _put_matrix(matrices, name, value)
    for i in range(K):
        for name in table:
            key = indexed_key(name, i + 1, table, K, reserved=DDE_INSTANT)
            _put_matrix(matrices, key, spec.delayed[i][name])
            kname = kernel_name(name)
            _put_kernel(kernels, indexed_key(kname, i + 1, knames, K), spec.kernels[i][kname])
    return {'matrices': matrices, 'kernels': kernels}


def _ddf_body(spec):
    K = spec.dims.K
    matrices, kernels = {}, {}
    for name, value in spec.matrices.items():
        _put_matrix(matrices, name, value)
    for i in range(K):
        for name in DDF_CHANNEL:
            key = indexed_key(name, i + 1, DDF_CHANNEL, K, reserved=DDF_INSTANT)
            _put_matrix(matrices, key, spec.channels[i][name])
        _put_kernel(kernels, indexed_key('Cvd', i + 1, ('Cvd',), K), spec.kernels[i])
    body = {'matrices': matrices, 'kernels': kernels}
    if spec.provenance:
        body['provenance'] = list(spec.provenance)
    return body


def _pie_body(spec):
    operators = {}
    for name, op in spec.operators.items():
        entry = {}
        _put_matrix(entry, 'P', op.P)
        for block in PI_BLOCKS:
            _put_kernel(entry, block, getattr(op, block))
        if entry:
            operators[name] = entry
    return {'operators': operators}


def spec_to_dict(spec):
    out = {
        'type': spec.kind,
        'dims': _encode_dims(spec),
        'delays': [_round17(t) for t in spec.delays],
    }
    if isinstance(spec, DDESpec):
        out.update(_dde_body(spec))
    elif isinstance(spec, DDFSpec):
        out.update(_ddf_body(spec))
    elif isinstance(spec, PIESpec):
        out.update(_pie_body(spec))
    else:
        raise UsageError(f'cannot serialize {type(spec).__name__}')
    return out


# reading


def _mapping(obj, key):
    value = obj.get(key, {})
    if not isinstance(value, dict):
        raise DimensionError(f'"{key}" must be an object')
    return value


def _read_dde(cls, obj, dims, delays):
    K = len(delays)
    table = cls.delayed_table
    knames = {kernel_name(name): name for name in table}
    matrices, delayed, kernels = {}, {}, {}
    for key, value in _mapping(obj, 'matrices').items():
        if key in DDE_INSTANT:
            matrices[key] = decode_matrix(value, key)
            continue
        hit = split_indexed(key, table, K)
        if hit is None:
            raise DimensionError(f'unknown {cls.kind} matrix {key!r}')
        name, i = hit
        delayed.setdefault(name, [None] * K)[i - 1] = decode_matrix(value, key)
    for key, terms in _mapping(obj, 'kernels').items():
        hit = split_indexed(key, knames, K)
        if hit is None:
            raise DimensionError(f'unknown {cls.kind} kernel {key!r}')
        kname, i = hit
        rows, cols = table[knames[kname]]
        shape = (dims.size(rows), dims.size(cols))
        kernel = decode_kernel(terms, key, shape, (-delays[i - 1], 0.0))
        kernels.setdefault(kname, [None] * K)[i - 1] = kernel
    return cls.build(dims, delays, matrices, delayed, kernels)


def _read_ddf(cls, obj, dims, delays):
    K = len(delays)
    if len(dims.channel_dims) != K:
        raise DimensionError(f'dims.p_i lists {len(dims.channel_dims)} channels for {K} delays')
    matrices, channels, Cvd = {}, {}, [None] * K
    for key, value in _mapping(obj, 'matrices').items():
        if key in DDF_INSTANT:
            matrices[key] = decode_matrix(value, key)
            continue
        hit = split_indexed(key, DDF_CHANNEL, K)
        if hit is None:
            raise DimensionError(f'unknown {cls.kind} matrix {key!r}')
        name, i = hit
        channels.setdefault(name, [None] * K)[i - 1] = decode_matrix(value, key)
    for key, terms in _mapping(obj, 'kernels').items():
        hit = split_indexed(key, ('Cvd',), K)
        if hit is None:
            raise DimensionError(f'unknown {cls.kind} kernel {key!r}')
        i = hit[1]
        shape = (dims.nv, dims.channel_dims[i - 1])
        Cvd[i - 1] = decode_kernel(terms, key, shape, (-delays[i - 1], 0.0))
    ddf = DDFSpec.build(dims, delays, matrices, channels, Cvd, obj.get('provenance', ()))
    return ddf if cls is DDFSpec else ddf.as_kind(cls)


def _read_operator(name, entry, dims):
    if not isinstance(entry, dict):
        raise DimensionError(f'PIE operator {name!r} must be an object')
    unknown = set(entry) - {'P', *PI_BLOCKS}
    if unknown:
        raise DimensionError(f'PIE operator {name!r} has unknown blocks {sorted(unknown)}')
    n_out, n_in, p_out, p_in = pie_operator_dims(dims, name)
    shapes = {
        'Q1': (n_out, p_in), 'Q2': (p_out, n_in),
        'R0': (p_out, p_in), 'R1': (p_out, p_in), 'R2': (p_out, p_in),
    }
    blocks = {}
    for block, shape in shapes.items():
        if block in entry:
            nvars = 2 if block in ('R1', 'R2') else 1
            blocks[block] = decode_kernel(entry[block], f'{name}.{block}', shape, UNIT, nvars=nvars)
    P = decode_matrix(entry['P'], f'{name}.P') if 'P' in entry else None
    if P is not None and P.shape != (n_out, n_in):
        raise DimensionError(f'{name}.P is {P.shape}, expected {(n_out, n_in)}')
    return PIOperator.build(n_out, n_in, p_out, p_in, P=P, **blocks)


def _read_pie(obj, dims, delays):
    operators = _mapping(obj, 'operators')
    unknown = set(operators) - set(PIE_OPERATORS)
    if unknown:
        raise DimensionError(f'unknown PIE operators {sorted(unknown)}')
    built = {}
    for name in PIE_OPERATORS:
        if name in operators:
            built[name] = _read_operator(name, operators[name], dims)
        else:
            built[name] = PIOperator.zero(*pie_operator_dims(dims, name))
    return PIESpec.build(dims, delays, built)


def spec_from_dict(obj):
    if not isinstance(obj, dict):
        raise UsageError('a spec file must hold a JSON object')
    kind = obj.get('type')
    if kind not in SPEC_TYPES:
        raise UsageError(f'unknown spec type {kind!r}')
    cls = SPEC_TYPES[kind]
    try:
        delays = [float(t) for t in obj.get('delays', [])]
    except (TypeError, ValueError) as exc:
        raise DimensionError(f'malformed delays: {exc}') from exc
    dims = _decode_dims(obj.get('dims'), delays)
    if issubclass(cls, DDESpec):
        return _read_dde(cls, obj, dims, delays)
    if issubclass(cls, DDFSpec):
        return _read_ddf(cls, obj, dims, delays)
    return _read_pie(obj, dims, delays)


def dumps_spec(spec):
    return json.dumps(spec_to_dict(spec), cls=ArrayEncoder, sort_keys=True, indent=2) + '\n'


def loads_spec(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f'spec is not valid JSON: {exc}') from exc
    return spec_from_dict(obj)


def write_spec(spec, path):
    Path(path).write_text(dumps_spec(spec))
    logger.info('wrote %s spec to %s', spec.kind, path)


def read_spec(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f'no such spec file: {path}')
    return loads_spec(path.read_text())


# trajectories


CSV_SIGNALS = ('x', 'y', 'z', 'v')


def trajectory_header(traj):
    header = ['t']
    for name in CSV_SIGNALS:
        values = getattr(traj, name)
        if values is not None:
            header.extend(f'{name}_{i}' for i in range(values.shape[1]))
    return header


def write_trajectory_csv(traj, path, digits=None):
    """One row per time step: t, x_*, y_*, z_*, v_*."""
    digits = resolve(digits, 'CSV_DIGITS')
    columns = [traj.t[:, None]] + [
        getattr(traj, name) for name in CSV_SIGNALS if getattr(traj, name) is not None
    ]
    table = np.hstack(columns)
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(trajectory_header(traj))
        for row in table:
            writer.writerow([f'{value:.{digits}g}' for value in row])
    logger.info('wrote %d samples to %s', table.shape[0], path)


def read_trajectory_csv(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f'no such trajectory file: {path}')
    with open(path, newline='') as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise UsageError(f'{path} is empty') from None
        rows = [[float(value) for value in row] for row in reader if row]
    if not header or header[0] != 't':
        raise UsageError(f'{path} does not start with a t column')
    table = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    signals = {}
    for name in CSV_SIGNALS:
        cols = [k for k, col in enumerate(header) if col.split('_')[0] == name]
        if cols or name != 'v':
            signals[name] = table[:, cols]
    return Trajectory(t=table[:, 0], **signals, kind=path.stem)


__all__ = [
    'dumps_spec', 'loads_spec', 'read_spec', 'write_spec', 'spec_to_dict',
    'spec_from_dict', 'write_trajectory_csv', 'read_trajectory_csv',
]

"""
Four-block partial-integral (PI) operators on R^n x L2[-1, 0]^p.

An operator {P, Q1, Q2, R0, R1, R2} maps (x, Phi) to

    ( P x + int_{-1}^0 Q1(s) Phi(s) ds,
      Q2(s) x + R0(s) Phi(s) + int_{-1}^s R1(s, t) Phi(t) dt + int_s^0 R2(s, t) Phi(t) dt )

Kernels are polynomial, so sums, scalings and compositions stay closed-form.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .conf import resolve
from .exceptions import DegreeOverflowError, DimensionError, DiscretizationError
from .kernels import PolyKernel
from .quadrature import barycentric_weights, cgl_nodes, gauss_nodes, interpolation_matrix

logger = logging.getLogger(__name__)

UNIT = (-1.0, 0.0)
SAMPLED_NODES = 32


def _k1(rows, cols):
    return PolyKernel.zeros(rows, cols, nvars=1, domain=UNIT)


def _k2(rows, cols):
    return PolyKernel.zeros(rows, cols, nvars=2, domain=UNIT)


@dataclass(frozen=True, eq=False)
class PIOperator:
    P: np.ndarray
    Q1: PolyKernel
    Q2: PolyKernel
    R0: PolyKernel
    R1: PolyKernel
    R2: PolyKernel

    def __post_init__(self):
        P = np.atleast_2d(np.array(self.P, dtype=float))
        P.setflags(write=False)
        object.__setattr__(self, 'P', P)
        n_out, n_in = P.shape
        p_out, p_in = self.R0.shape
        expected = {
            'Q1': ((n_out, p_in), 1), 'Q2': ((p_out, n_in), 1), 'R0': ((p_out, p_in), 1),
            'R1': ((p_out, p_in), 2), 'R2': ((p_out, p_in), 2),
        }
        for name, (shape, nvars) in expected.items():
            k = getattr(self, name)
            if k.shape != shape or k.nvars != nvars:
                raise DimensionError(
                    f'{name} is {k.shape} in {k.nvars} variables, expected {shape} in {nvars}'
                )

    @classmethod
    def build(cls, n_out, n_in, p_out, p_in, P=None, Q1=None, Q2=None, R0=None, R1=None, R2=None):
        """Operator with the given blocks; missing blocks are zero. Matrices become constant kernels."""
        def one(value, rows, cols):
            if value is None:
                return _k1(rows, cols)
            if isinstance(value, PolyKernel):
                return value
            return PolyKernel.constant(np.reshape(value, (rows, cols)), domain=UNIT)

        def two(value, rows, cols):
            if value is None:
                return _k2(rows, cols)
            if isinstance(value, PolyKernel):
                return value
            return PolyKernel.constant(np.reshape(value, (rows, cols)), nvars=2, domain=UNIT)

        return cls(
            P=np.zeros((n_out, n_in)) if P is None else np.reshape(P, (n_out, n_in)),
            Q1=one(Q1, n_out, p_in), Q2=one(Q2, p_out, n_in), R0=one(R0, p_out, p_in),
            R1=two(R1, p_out, p_in), R2=two(R2, p_out, p_in),
        )

    @classmethod
    def identity(cls, n, p):
        return cls.build(n, n, p, p, P=np.eye(n), R0=np.eye(p))

    @classmethod
    def zero(cls, n_out, n_in, p_out, p_in):
        return cls.build(n_out, n_in, p_out, p_in)

    @property
    def dims(self):
        """(n_out, n_in, p_out, p_in)"""
        return self.P.shape + self.R0.shape

    def blocks(self):
        return {'P': self.P, 'Q1': self.Q1, 'Q2': self.Q2, 'R0': self.R0, 'R1': self.R1, 'R2': self.R2}

    def max_degree(self):
        return max(getattr(self, k).effective_degree() for k in ('Q1', 'Q2', 'R0', 'R1', 'R2'))

    def is_zero(self):
        return not np.any(self.P) and all(
            getattr(self, k).is_zero() for k in ('Q1', 'Q2', 'R0', 'R1', 'R2'))

    def __repr__(self):
        return 'PIOperator(n_out={}, n_in={}, p_out={}, p_in={})'.format(*self.dims)

    def __eq__(self, other):
        if not isinstance(other, PIOperator):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.P, other.P) and all(
            getattr(self, k).trimmed() == getattr(other, k).trimmed()
            for k in ('Q1', 'Q2', 'R0', 'R1', 'R2')
        )

    __hash__ = None

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, alpha):
        return scale(self, alpha)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return compose(self, other)


@dataclass(frozen=True, eq=False)
class HybridVector:
    """An element (x, Phi) of R^n x L2[-1, 0]^p.

    Phi is polynomial (`coeffs[k]` multiplies s**k, shape (deg+1, p)) or any
    vectorized callable s -> array of shape (len(s), p).
    """
    finite: np.ndarray
    coeffs: np.ndarray = None
    func: object = None
    p: int = None

    def __post_init__(self):
        object.__setattr__(self, 'finite', np.asarray(self.finite, dtype=float).reshape(-1))
        if self.coeffs is not None:
            coeffs = np.asarray(self.coeffs, dtype=float)
            if coeffs.ndim == 1:
                coeffs = coeffs[:, None]
            object.__setattr__(self, 'coeffs', coeffs)
            object.__setattr__(self, 'p', coeffs.shape[1])
        elif self.func is None:
            raise DimensionError('HybridVector needs polynomial coefficients or a callable')
        elif self.p is None:
            raise DimensionError('sampled HybridVector needs its function dimension p')

    @classmethod
    def polynomial(cls, finite, coeffs):
        return cls(finite=finite, coeffs=coeffs)

    @classmethod
    def sampled(cls, finite, func, p):
        return cls(finite=finite, func=func, p=p)

    @property
    def n(self):
        return self.finite.size

    @property
    def is_polynomial(self):
        return self.coeffs is not None

    def values(self, s):
        """Function part at the points s, shape (len(s), p)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.is_polynomial:
            return np.polynomial.polynomial.polyval(s, self.coeffs).T.reshape(s.size, self.p)
        return np.asarray(self.func(s), dtype=float).reshape(s.size, self.p)

    def __add__(self, other):
        if self.is_polynomial and other.is_polynomial:
            d = max(self.coeffs.shape[0], other.coeffs.shape[0])
            a = np.zeros((d, self.p))
            a[:self.coeffs.shape[0]] += self.coeffs
            a[:other.coeffs.shape[0]] += other.coeffs
            return HybridVector.polynomial(self.finite + other.finite, a)
        return HybridVector.sampled(
            self.finite + other.finite, lambda s: self.values(s) + other.values(s), self.p)

    def __mul__(self, alpha):
        if self.is_polynomial:
            return HybridVector.polynomial(alpha * self.finite, alpha * self.coeffs)
        return HybridVector.sampled(alpha * self.finite, lambda s: alpha * self.values(s), self.p)

    __rmul__ = __mul__


# polynomial helpers on (s, theta) coefficient grids


def _integrate_bound(coeffs2, c, value_or_var, sign, out):
    """Add sign * (bound**(c+1))/(c+1) * coeffs2 to `out`, bound being -1, 0, 's' or 't'."""
    factor = sign / (c + 1)
    if value_or_var == 's':
        out[c + 1:c + 1 + coeffs2.shape[0], :coeffs2.shape[1]] += factor * coeffs2
    elif value_or_var == 't':
        out[:coeffs2.shape[0], c + 1:c + 1 + coeffs2.shape[1]] += factor * coeffs2
    else:
        out[:coeffs2.shape[0], :coeffs2.shape[1]] += factor * float(value_or_var) ** (c + 1) * coeffs2


def _chain(left, right, lower, upper):
    """int_lower^upper L(s, eta) @ R(eta, t) d eta as an (s, t) coefficient grid.

    `left` has axes (s, eta, rows, k); `right` has axes (eta, t, k, cols).
    Bounds are -1.0, 0.0, 's' or 't'.
    """
    ds, de1 = left.shape[:2]
    de2, dt = right.shape[:2]
    rows, cols = left.shape[2], right.shape[3]
    # C[c][a, b] collects the eta**c coefficient of s**a t**b.
    C = np.zeros((de1 + de2 - 1, ds, dt, rows, cols))
    for c1 in range(de1):
        for c2 in range(de2):
            C[c1 + c2] += np.einsum('aij,bjk->abik', left[:, c1], right[c2])
    size = ds + dt + de1 + de2
    out = np.zeros((size, size, rows, cols))
    for c in range(C.shape[0]):
        if not np.any(C[c]):
            continue
        _integrate_bound(C[c], c, upper, 1.0, out)
        _integrate_bound(C[c], c, lower, -1.0, out)
    return out


def _as_left(kernel):
    """Kernel as an (s, eta, rows, cols) grid: 2-var R(s, eta) as is, 1-var k(eta) in eta."""
    if kernel.nvars == 2:
        return kernel.coeffs
    return kernel.coeffs[None, :]


def _as_right(kernel):
    """Kernel as an (eta, t, rows, cols) grid: 2-var R(eta, t) as is, 1-var k(eta) in eta."""
    if kernel.nvars == 2:
        return kernel.coeffs
    return kernel.coeffs[:, None]


def _grid_add(*grids):
    size = max(max(g.shape[:2]) for g in grids)
    out = np.zeros((size, size) + grids[0].shape[2:])
    for g in grids:
        out[:g.shape[0], :g.shape[1]] += g
    return out


def _s_times_grid(k1, grid):
    """k(s) @ R(s, t)"""
    a, b = k1.shape[0], grid.shape[0]
    out = np.zeros((a + b - 1, grid.shape[1], k1.shape[1], grid.shape[3]))
    for i in range(a):
        out[i:i + b] += np.einsum('ij,abjk->abik', k1[i], grid)
    return out


def _grid_times_t(grid, k1):
    """R(s, t) @ k(t)"""
    a, b = grid.shape[1], k1.shape[0]
    out = np.zeros((grid.shape[0], a + b - 1, grid.shape[2], k1.shape[2]))
    for j in range(b):
        out[:, j:j + a] += np.einsum('abij,jk->abik', grid, k1[j])
    return out


def _outer(ks, kt):
    """k1(s) @ k2(t)"""
    return np.einsum('aij,bjk->abik', ks, kt)


def _grid_to_kernel(grid, nvars, cap, name):
    if nvars == 1:
        # Only the s-axis (t-degree 0) is populated for one-variable results.
        if np.any(grid[:, 1:]):
            raise DimensionError(f'{name}: one-variable result depends on the second variable')
        kernel = PolyKernel(grid[:, 0], nvars=1, domain=UNIT)
    else:
        kernel = PolyKernel(grid, nvars=2, domain=UNIT)
    kernel = kernel.trimmed()
    if kernel.effective_degree() > cap:
        raise DegreeOverflowError(
            f'composition produces degree {kernel.effective_degree()} in {name}, cap is {cap}'
        )
    return kernel


def _t_only(grid):
    """Move a grid that depends only on t onto the s axis."""
    if np.any(grid[1:, :]):
        raise DimensionError('expected a grid independent of s')
    out = np.zeros_like(grid)
    out[:, 0] = grid[0, :]
    return out


# operations


def _require(condition, message):
    if not condition:
        raise DimensionError(message)


def apply(op, v):
    """Apply a PI operator to a hybrid vector."""
    n_out, n_in, p_out, p_in = op.dims
    _require(v.n == n_in and v.p == p_in,
             f'{op!r} cannot act on a vector with n={v.n}, p={v.p}')
    if not v.is_polynomial:
        return _apply_sampled(op, v)

    x = v.finite
    phi = v.coeffs[:, :, None]  # (deg+1, p_in, 1)
    phi_kernel = PolyKernel(phi, nvars=1, domain=UNIT)

    finite = op.P @ x + op.Q1.product(phi_kernel).integral()[:, 0]

    # Function part as s-polynomial coefficients (deg, p_out).
    parts = [
        op.Q2.right(x[:, None]).coeffs[:, :, 0],
        op.R0.product(phi_kernel).coeffs[:, :, 0],
    ]
    phi_right = phi[:, None]  # (deg+1, t=1, p_in, 1) in (eta, t) layout
    parts.append(_chain(op.R1.coeffs, phi_right, -1.0, 's')[:, 0, :, 0])
    parts.append(_chain(op.R2.coeffs, phi_right, 's', 0.0)[:, 0, :, 0])
    size = max(part.shape[0] for part in parts)
    coeffs = np.zeros((size, p_out))
    for part in parts:
        coeffs[:part.shape[0]] += part
    return HybridVector.polynomial(finite, coeffs)


def _apply_sampled(op, v):
    n_out, n_in, p_out, p_in = op.dims
    x = v.finite
    s_all, w_all = gauss_nodes(-1.0, 0.0, SAMPLED_NODES)
    finite = op.P @ x + np.einsum('q,qij,qj->i', w_all, op.Q1.evaluate_many(s_all), v.values(s_all))

    def func(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.einsum('qij,j->qi', op.Q2.evaluate_many(s), x)
        out += np.einsum('qij,qj->qi', op.R0.evaluate_many(s), v.values(s))
        for q, sq in enumerate(s):
            for kernel, lo, hi in ((op.R1, -1.0, sq), (op.R2, sq, 0.0)):
                if hi <= lo:
                    continue
                t, w = gauss_nodes(lo, hi, SAMPLED_NODES)
                out[q] += np.einsum('q,qij,qj->i', w, kernel.evaluate_many(np.full_like(t, sq), t),
                                    v.values(t))
        return out

    return HybridVector.sampled(finite, func, p_out)


def add(a, b):
    """Blockwise sum of two PI operators with matching dimensions."""
    _require(a.dims == b.dims, f'cannot add {a!r} and {b!r}')
    return PIOperator(
        P=a.P + b.P, Q1=a.Q1 + b.Q1, Q2=a.Q2 + b.Q2, R0=a.R0 + b.R0, R1=a.R1 + b.R1, R2=a.R2 + b.R2,
    )


def scale(a, alpha):
    alpha = float(alpha)
    return PIOperator(
        P=alpha * a.P, Q1=alpha * a.Q1, Q2=alpha * a.Q2, R0=alpha * a.R0,
        R1=alpha * a.R1, R2=alpha * a.R2,
    )


def compose(a, b, max_degree=None):
    """The operator a∘b, i.e. apply(compose(a, b), v) == apply(a, apply(b, v))."""
    cap = resolve(max_degree, 'MAX_KERNEL_DEGREE')
    na_out, na_in, pa_out, pa_in = a.dims
    nb_out, nb_in, pb_out, pb_in = b.dims
    _require(na_in == nb_out and pa_in == pb_out, f'cannot compose {a!r} with {b!r}')

    Q1a, Q2a, R0a, R1a, R2a = a.Q1.coeffs, a.Q2.coeffs, a.R0.coeffs, a.R1.coeffs, a.R2.coeffs
    Q1b, Q2b, R0b, R1b, R2b = b.Q1.coeffs, b.Q2.coeffs, b.R0.coeffs, b.R1.coeffs, b.R2.coeffs

    # Finite-finite block.
    P = a.P @ b.P + _chain(_as_left(a.Q1), _as_right(b.Q2), -1.0, 0.0)[0, 0]

    # Finite-function block, a function of t before renaming to s.
    Q1_grid = _grid_add(
        np.matmul(a.P, Q1b)[None, :],
        a.Q1.product(b.R0).coeffs[None, :],
        _chain(_as_left(a.Q1), R1b, 't', 0.0),
        _chain(_as_left(a.Q1), R2b, -1.0, 't'),
    )
    Q1 = _grid_to_kernel(_t_only(Q1_grid), 1, cap, 'Q1')

    # Function-finite block.
    Q2_grid = _grid_add(
        np.matmul(Q2a, b.P)[:, None],
        a.R0.product(b.Q2).coeffs[:, None],
        _chain(R1a, _as_right(b.Q2), -1.0, 's'),
        _chain(R2a, _as_right(b.Q2), 's', 0.0),
    )
    Q2 = _grid_to_kernel(Q2_grid, 1, cap, 'Q2')

    R0 = _grid_to_kernel(a.R0.product(b.R0).coeffs[:, None], 1, cap, 'R0')

    cross = _outer(Q2a, Q1b)
    R1 = _grid_to_kernel(_grid_add(
        cross,
        _s_times_grid(R0a, R1b),
        _grid_times_t(R1a, R0b),
        _chain(R1a, R1b, 't', 's'),
        _chain(R1a, R2b, -1.0, 't'),
        _chain(R2a, R1b, 's', 0.0),
    ), 2, cap, 'R1')
    R2 = _grid_to_kernel(_grid_add(
        cross,
        _s_times_grid(R0a, R2b),
        _grid_times_t(R2a, R0b),
        _chain(R1a, R2b, -1.0, 's'),
        _chain(R2a, R1b, 't', 0.0),
        _chain(R2a, R2b, 's', 't'),
    ), 2, cap, 'R2')
    return PIOperator(P=P, Q1=Q1, Q2=Q2, R0=R0, R1=R1, R2=R2)


class Collocation:
    """M Chebyshev–Gauss–Lobatto nodes on [-1, 0] with their Lagrange basis."""

    def __init__(self, M):
        if M < 2:
            raise DiscretizationError(f'collocation order M={M} is below 2')
        self.M = M
        self.nodes = cgl_nodes(M)
        self.bary = barycentric_weights(M)

    def basis(self, points):
        return interpolation_matrix(self.nodes, self.bary, points)

    def sample(self, v):
        """[x; Phi_0(nodes); Phi_1(nodes); ...] for a hybrid vector."""
        vals = v.values(self.nodes)  # (M, p)
        return np.concatenate([v.finite, vals.T.reshape(-1)])

    def _gauss(self, degree):
        return max(2, (degree + self.M) // 2 + 2)


def discretize(op, M):
    """Dense (n_out + p_out*M) x (n_in + p_in*M) matrix of `op` on M collocation nodes.

    Function components are stored component-major: component k occupies
    rows k*M .. k*M + M-1 after the finite part.
    """
    degree = op.max_degree()
    if M < max(2, degree + 2):
        raise DiscretizationError(f'collocation order M={M} too small for kernel degree {degree}')
    col = Collocation(M)
    n_out, n_in, p_out, p_in = op.dims
    nodes = col.nodes
    npts = col._gauss(degree)

    out = np.zeros((n_out + p_out * M, n_in + p_in * M))
    out[:n_out, :n_in] = op.P

    # Q1: int_{-1}^0 Q1(t) l_j(t) dt
    t, w = gauss_nodes(-1.0, 0.0, npts)
    block = np.einsum('q,qkl,qj->klj', w, op.Q1.evaluate_many(t), col.basis(t))
    out[:n_out, n_in:] = block.reshape(n_out, p_in * M)

    # Q2 and R0 act pointwise at the nodes.
    q2 = op.Q2.evaluate_many(nodes)  # (M, p_out, n_in)
    out[n_out:, :n_in] = np.transpose(q2, (1, 0, 2)).reshape(p_out * M, n_in)
    r0 = op.R0.evaluate_many(nodes)  # (M, p_out, p_in)
    fn = np.zeros((p_out, M, p_in, M))
    for i in range(M):
        fn[:, i, :, i] += r0[i]

    # R1 on [-1, s_i], R2 on [s_i, 0].
    for i, si in enumerate(nodes):
        for kernel, lo, hi in ((op.R1, -1.0, si), (op.R2, si, 0.0)):
            if hi - lo <= 0.0 or kernel.is_zero():
                continue
            t, w = gauss_nodes(lo, hi, npts)
            vals = kernel.evaluate_many(np.full_like(t, si), t)
            fn[:, i, :, :] += np.einsum('q,qkl,qj->klj', w, vals, col.basis(t))
    out[n_out:, n_in:] = fn.reshape(p_out * M, p_in * M)
    logger.debug('discretized %r at M=%d into a %dx%d matrix', op, M, *out.shape)
    return out

"""
Matrix-valued polynomial kernels in one variable (s) or two (s, theta).

Coefficients are stored densely by monomial degree:
    one variable:  coeffs[a]      multiplies s**a,            shape (d+1, rows, cols)
    two variables: coeffs[a, b]   multiplies s**a * theta**b, shape (d+1, d+1, rows, cols)
"""
import numpy as np
from numpy.polynomial import polynomial as P

from .exceptions import DimensionError, DomainError

DOMAIN_SLACK = 1e-12


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


class PolyKernel:
    """A polynomial matrix function on a domain [lo, hi] (per variable)."""

    __slots__ = ('_coeffs', '_nvars', '_domain')

    def __init__(self, coeffs, nvars=1, domain=(-1.0, 0.0)):
        coeffs = np.asarray(coeffs, dtype=float)
        if nvars not in (1, 2):
            raise DimensionError(f'nvars must be 1 or 2, got {nvars}')
        if coeffs.ndim != nvars + 2:
            raise DimensionError(
                f'{nvars}-variable kernel needs a {nvars + 2}-d coefficient array, '
                f'got shape {coeffs.shape}'
            )
        if nvars == 2 and coeffs.shape[0] != coeffs.shape[1]:
            # Square the degree grid so both variables share one degree.
            d = max(coeffs.shape[0], coeffs.shape[1])
            padded = np.zeros((d, d) + coeffs.shape[2:])
            padded[:coeffs.shape[0], :coeffs.shape[1]] = coeffs
            coeffs = padded
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise DimensionError(f'empty kernel domain [{lo}, {hi}]')
        self._coeffs = _frozen(coeffs)
        self._nvars = nvars
        self._domain = (lo, hi)

    # construction

    @classmethod
    def zeros(cls, rows, cols, nvars=1, domain=(-1.0, 0.0)):
        shape = (1,) * nvars + (rows, cols)
        return cls(np.zeros(shape), nvars=nvars, domain=domain)

    @classmethod
    def constant(cls, matrix, nvars=1, domain=(-1.0, 0.0)):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(matrix.reshape((1,) * nvars + matrix.shape), nvars=nvars, domain=domain)

    @classmethod
    def from_scalar_coeffs(cls, coeffs, domain=(-1.0, 0.0)):
        """1x1 one-variable kernel from plain polynomial coefficients."""
        coeffs = np.asarray(coeffs, dtype=float).reshape(-1, 1, 1)
        return cls(coeffs, nvars=1, domain=domain)

    @classmethod
    def in_theta(cls, kernel):
        """Lift a one-variable kernel k(.) to the two-variable kernel (s, theta) -> k(theta)."""
        kernel._require_vars(1)
        c = kernel.coeffs
        grid = np.zeros((c.shape[0], c.shape[0]) + c.shape[1:])
        grid[0, :] = c
        return cls(grid, nvars=2, domain=kernel.domain)

    # properties

    @property
    def coeffs(self):
        return self._coeffs

    @property
    def nvars(self):
        return self._nvars

    @property
    def domain(self):
        return self._domain

    @property
    def shape(self):
        return self._coeffs.shape[self._nvars:]

    @property
    def rows(self):
        return self.shape[0]

    @property
    def cols(self):
        return self.shape[1]

    @property
    def degree(self):
        return self._coeffs.shape[0] - 1

    def effective_degree(self):
        """Highest degree carrying a nonzero coefficient (0 for the zero kernel)."""
        c = self._coeffs
        if self._nvars == 1:
            nz = [a for a in range(c.shape[0]) if np.any(c[a])]
            return max(nz, default=0)
        nz = [max(a, b) for a in range(c.shape[0]) for b in range(c.shape[1]) if np.any(c[a, b])]
        return max(nz, default=0)

    def is_zero(self):
        return not np.any(self._coeffs)

    def __repr__(self):
        return (
            f'PolyKernel({self.rows}x{self.cols}, vars={self._nvars}, '
            f'degree={self.degree}, domain={self._domain})'
        )

    def __eq__(self, other):
        if not isinstance(other, PolyKernel):
            return NotImplemented
        if self._nvars != other._nvars or self.shape != other.shape:
            return False
        if self._domain != other._domain:
            return False
        a, b = _pad_pair(self, other)
        return bool(np.array_equal(a, b))

    __hash__ = None

    # evaluation

    def _check_domain(self, values):
        lo, hi = self._domain
        slack = DOMAIN_SLACK * max(1.0, hi - lo)
        values = np.asarray(values, dtype=float)
        if values.size and (values.min() < lo - slack or values.max() > hi + slack):
            raise DomainError(
                f'kernel evaluated at {values.min():.17g}..{values.max():.17g}, '
                f'outside its domain [{lo}, {hi}]'
            )

    def __call__(self, s, theta=None):
        return eval_kernel(self, s, theta)

    def evaluate_many(self, s, theta=None):
        """Evaluate at an array of points; result has shape (len, rows, cols)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        self._check_domain(s)
        if self._nvars == 1:
            if theta is not None:
                raise DimensionError('one-variable kernel takes no theta argument')
            out = P.polyval(s, self._coeffs)
            return np.moveaxis(out, -1, 0)
        if theta is None:
            raise DimensionError('two-variable kernel needs both s and theta')
        s, theta = np.broadcast_arrays(s, np.atleast_1d(np.asarray(theta, dtype=float)))
        self._check_domain(theta)
        out = P.polyval2d(s, theta, self._coeffs)
        return np.moveaxis(out, -1, 0)

    # algebra

    def _require_vars(self, nvars):
        if self._nvars != nvars:
            raise DimensionError(f'expected a {nvars}-variable kernel, got {self._nvars}')

    def _like(self, coeffs, nvars=None, domain=None):
        return PolyKernel(
            coeffs, nvars=self._nvars if nvars is None else nvars,
            domain=self._domain if domain is None else domain,
        )

    def __add__(self, other):
        if not isinstance(other, PolyKernel):
            return NotImplemented
        if self._nvars != other._nvars or self.shape != other.shape:
            raise DimensionError(f'cannot add {self!r} and {other!r}')
        a, b = _pad_pair(self, other)
        return self._like(a + b)

    def __neg__(self):
        return self._like(-self._coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return self._like(float(alpha) * self._coeffs)

    __rmul__ = __mul__

    def left(self, matrix):
        """matrix @ K(.)"""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[1] != self.rows:
            raise DimensionError(f'cannot left-multiply {self!r} by {matrix.shape}')
        return self._like(np.matmul(matrix, self._coeffs))

    def right(self, matrix):
        """K(.) @ matrix"""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != self.cols:
            raise DimensionError(f'cannot right-multiply {self!r} by {matrix.shape}')
        return self._like(np.matmul(self._coeffs, matrix))

    def product(self, other):
        """Pointwise matrix product K1(s) @ K2(s) of one-variable kernels."""
        self._require_vars(1)
        other._require_vars(1)
        if self.cols != other.rows:
            raise DimensionError(f'cannot multiply {self!r} by {other!r}')
        a, b = self._coeffs, other._coeffs
        out = np.zeros((a.shape[0] + b.shape[0] - 1, self.rows, other.cols))
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i + j] += a[i] @ b[j]
        return self._like(out)

    def trimmed(self):
        """Drop trailing all-zero degrees."""
        d = self.effective_degree()
        if self._nvars == 1:
            return self._like(self._coeffs[:d + 1])
        return self._like(self._coeffs[:d + 1, :d + 1])

    def padded(self, degree):
        if degree < self.degree:
            raise DimensionError(f'cannot pad degree {self.degree} down to {degree}')
        shape = (degree + 1,) * self._nvars + self.shape
        out = np.zeros(shape)
        idx = tuple(slice(0, self.degree + 1) for _ in range(self._nvars))
        out[idx] = self._coeffs
        return self._like(out)

    def rescaled(self, tau):
        """tau * K(tau * s), moving a kernel on [-tau, 0] onto [-1, 0]."""
        self._require_vars(1)
        powers = float(tau) ** np.arange(1, self.degree + 2)
        return PolyKernel(self._coeffs * powers[:, None, None], nvars=1, domain=(-1.0, 0.0))

    def antiderivative(self, lower=None):
        """s -> integral of K from `lower` (default: domain start) to s."""
        self._require_vars(1)
        lower = self._domain[0] if lower is None else lower
        return self._like(P.polyint(self._coeffs, lbnd=lower))

    def integral(self):
        """Definite integral over the domain, a rows x cols matrix."""
        self._require_vars(1)
        lo, hi = self._domain
        return P.polyval(hi, P.polyint(self._coeffs, lbnd=lo))

    def with_domain(self, domain):
        return self._like(self._coeffs, domain=domain)


def _pad_pair(a, b):
    d = max(a.degree, b.degree)
    return a.padded(d).coeffs, b.padded(d).coeffs


def eval_kernel(kernel, s, theta=None):
    """Evaluate a kernel at a single point; returns a rows x cols matrix."""
    if np.ndim(s) != 0 or (theta is not None and np.ndim(theta) != 0):
        raise DimensionError('eval_kernel takes scalar points; use evaluate_many for arrays')
    return kernel.evaluate_many(s, theta)[0]


def block_kernel(blocks, nvars=1, domain=(-1.0, 0.0)):
    """Assemble a block matrix of kernels (or plain matrices / None for zero) into one kernel.

    `blocks` is a list of rows, each a list of PolyKernel, ndarray or None. Row heights
    and column widths are taken from the first non-None entry in each row/column.
    """
    nrows, ncols = len(blocks), len(blocks[0])
    heights = [None] * nrows
    widths = [None] * ncols
    for i, row in enumerate(blocks):
        if len(row) != ncols:
            raise DimensionError('ragged kernel block layout')
        for j, item in enumerate(row):
            if item is None:
                continue
            shape = item.shape if isinstance(item, PolyKernel) else np.atleast_2d(item).shape
            heights[i] = shape[0] if heights[i] is None else heights[i]
            widths[j] = shape[1] if widths[j] is None else widths[j]
            if (heights[i], widths[j]) != tuple(shape):
                raise DimensionError(f'block ({i}, {j}) has shape {shape}, expected '
                                     f'({heights[i]}, {widths[j]})')
    if None in heights or None in widths:
        raise DimensionError('every block row and column needs at least one sized entry')

    degree = max(
        [item.degree for row in blocks for item in row if isinstance(item, PolyKernel)],
        default=0,
    )
    out = np.zeros((degree + 1,) * nvars + (sum(heights), sum(widths)))
    r0 = 0
    for i, row in enumerate(blocks):
        c0 = 0
        for j, item in enumerate(row):
            rs = slice(r0, r0 + heights[i])
            cs = slice(c0, c0 + widths[j])
            if isinstance(item, PolyKernel):
                if item.nvars != nvars:
                    raise DimensionError(f'block ({i}, {j}) has {item.nvars} variables')
                k = item.padded(degree).coeffs
                out[(Ellipsis, rs, cs)] = k
            elif item is not None:
                out[(0,) * nvars + (rs, cs)] = np.atleast_2d(item)
            c0 += widths[j]
        r0 += heights[i]
    return PolyKernel(out, nvars=nvars, domain=domain)

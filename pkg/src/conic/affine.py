"""
Complex matrix-valued affine functions of a real decision vector.

Every expression stores a sparse coefficient matrix and a constant vector over
the row-major flattening of its shape, so value(x) = coef @ x + const. Products
are only formed with constants, which keeps every expression affine.
"""
import numbers
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

ArrayLike = Union[np.ndarray, numbers.Number]


def _as_matrix(value) -> np.ndarray:
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"Expected at most 2 dimensions, got shape {arr.shape}")
    return arr


class Affine:
    """
    Complex array of shape (p, q) that depends affinely on real variables.
    """

    # numpy defers arithmetic with Affine operands to the reflected methods
    __array_ufunc__ = None

    def __init__(self, coef, const, shape: Tuple[int, int]):
        self.shape = (int(shape[0]), int(shape[1]))
        size = self.shape[0] * self.shape[1]
        self.coef = sp.csr_matrix(coef, dtype=complex)
        self.const = np.asarray(const, dtype=complex).reshape(size)
        if self.coef.shape[0] != size:
            raise ValueError(f"Coefficient rows {self.coef.shape[0]} do not match shape {self.shape}")

    # construction

    @classmethod
    def constant(cls, value) -> "Affine":
        arr = _as_matrix(value)
        return cls(sp.csr_matrix((arr.size, 0), dtype=complex), arr.ravel(), arr.shape)

    @classmethod
    def lift(cls, value) -> "Affine":
        if isinstance(value, Affine):
            return value
        return cls.constant(value)

    @classmethod
    def variable(cls, start: int, shape: Tuple[int, int]) -> "Affine":
        """Real variables start, start+1, ... laid out row-major in shape."""
        size = shape[0] * shape[1]
        cols = np.arange(start, start + size)
        coef = sp.csr_matrix((np.ones(size), (np.arange(size), cols)), shape=(size, start + size))
        return cls(coef, np.zeros(size), shape)

    @classmethod
    def zeros(cls, shape: Tuple[int, int]) -> "Affine":
        return cls.constant(np.zeros(shape))

    # properties

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def num_vars(self) -> int:
        return self.coef.shape[1]

    @property
    def is_constant(self) -> bool:
        return self.coef.nnz == 0

    def _cols(self, n: int) -> sp.csr_matrix:
        if n == self.coef.shape[1]:
            return self.coef
        if n < self.coef.shape[1]:
            raise ValueError("Cannot shrink the variable space of an expression")
        c = self.coef
        return sp.csr_matrix((c.data, c.indices, c.indptr), shape=(c.shape[0], n))

    def value(self, x: Sequence[float] = None) -> np.ndarray:
        """Evaluate at x (missing trailing variables read as zero)."""
        if x is None or self.num_vars == 0:
            flat = self.const.copy()
            if x is None and not self.is_constant:
                raise ValueError("Expression depends on variables; pass an assignment")
        else:
            x = np.asarray(x, dtype=float)
            if x.size < self.num_vars:
                x = np.concatenate([x, np.zeros(self.num_vars - x.size)])
            flat = self.coef @ x[: self.num_vars] + self.const
        return flat.reshape(self.shape)

    # arithmetic

    def _broadcast(self, shape: Tuple[int, int]) -> "Affine":
        if self.shape == shape:
            return self
        if self.size != 1:
            raise ValueError(f"Cannot broadcast shape {self.shape} to {shape}")
        return self.outer(np.ones(shape))

    def __add__(self, other) -> "Affine":
        other = Affine.lift(other)
        if other.shape != self.shape:
            if other.size == 1:
                other = other._broadcast(self.shape)
            else:
                return self._broadcast(other.shape) + other
        n = max(self.num_vars, other.num_vars)
        return Affine(self._cols(n) + other._cols(n), self.const + other.const, self.shape)

    __radd__ = __add__

    def __neg__(self) -> "Affine":
        return Affine(-self.coef, -self.const, self.shape)

    def __sub__(self, other) -> "Affine":
        return self + (-Affine.lift(other))

    def __rsub__(self, other) -> "Affine":
        return Affine.lift(other) - self

    def __mul__(self, other) -> "Affine":
        if isinstance(other, Affine):
            if other.is_constant:
                other = other.value()
            elif self.is_constant:
                return other * self.value()
            else:
                raise TypeError("Product of two variable expressions is not affine")
        arr = np.asarray(other, dtype=complex)
        if arr.size == 1:
            s = complex(arr.ravel()[0])
            return Affine(self.coef * s, self.const * s, self.shape)
        if self.size == 1:
            return self.outer(arr)
        if arr.shape == self.shape:
            d = sp.diags(arr.ravel())
            return Affine(d @ self.coef, arr.ravel() * self.const, self.shape)
        raise ValueError(f"Cannot multiply shape {self.shape} by {arr.shape}")

    __rmul__ = __mul__

    def __truediv__(self, other: numbers.Number) -> "Affine":
        return self * (1.0 / other)

    def outer(self, array) -> "Affine":
        """Scalar expression times a constant array."""
        if self.size != 1:
            raise ValueError("outer() needs a scalar expression")
        arr = _as_matrix(array)
        vec = sp.csr_matrix(arr.reshape(-1, 1))
        return Affine(sp.kron(vec, self.coef, format="csr"), arr.ravel() * self.const[0], arr.shape)

    def __matmul__(self, other) -> "Affine":
        if isinstance(other, Affine):
            if not other.is_constant:
                if self.is_constant:
                    return self.value() @ other
                raise TypeError("Product of two variable expressions is not affine")
            other = other.value()
        K = _as_matrix(other)
        p, q = self.shape
        if K.shape[0] != q:
            raise ValueError(f"matmul shape mismatch {self.shape} @ {K.shape}")
        T = sp.kron(sp.identity(p, format="csr"), sp.csr_matrix(K.T), format="csr")
        return Affine(T @ self.coef, T @ self.const, (p, K.shape[1]))

    def __rmatmul__(self, other) -> "Affine":
        K = np.asarray(other, dtype=complex)
        if K.ndim == 1:
            K = K.reshape(1, -1)
        p, q = self.shape
        if K.shape[1] != p:
            raise ValueError(f"matmul shape mismatch {K.shape} @ {self.shape}")
        T = sp.kron(sp.csr_matrix(K), sp.identity(q, format="csr"), format="csr")
        return Affine(T @ self.coef, T @ self.const, (K.shape[0], q))

    # structural operations

    def conj(self) -> "Affine":
        return Affine(self.coef.conjugate(), self.const.conj(), self.shape)

    def _with_data(self, data) -> sp.csr_matrix:
        c = self.coef
        return sp.csr_matrix((data.astype(complex), c.indices, c.indptr), shape=c.shape)

    def real(self) -> "Affine":
        return Affine(self._with_data(self.coef.data.real), self.const.real, self.shape)

    def imag(self) -> "Affine":
        return Affine(self._with_data(self.coef.data.imag), self.const.imag, self.shape)

    @property
    def T(self) -> "Affine":
        p, q = self.shape
        perm = np.arange(p * q).reshape(p, q).T.ravel()
        return Affine(self.coef[perm], self.const[perm], (q, p))

    @property
    def H(self) -> "Affine":
        return self.T.conj()

    def reshape(self, shape: Tuple[int, int]) -> "Affine":
        if shape[0] * shape[1] != self.size:
            raise ValueError(f"Cannot reshape {self.shape} to {shape}")
        return Affine(self.coef, self.const, shape)

    def rows(self, index: Iterable[int]) -> "Affine":
        """Flat entries selected by index, returned as a column."""
        idx = np.asarray(list(index), dtype=int)
        return Affine(self.coef[idx], self.const[idx], (idx.size, 1))

    def __getitem__(self, key) -> "Affine":
        idx = np.arange(self.size).reshape(self.shape)[key]
        idx = np.asarray(idx)
        if idx.ndim == 0:
            shape = (1, 1)
        elif idx.ndim == 1:
            shape = (idx.size, 1)
        else:
            shape = idx.shape
        flat = idx.ravel()
        return Affine(self.coef[flat], self.const[flat], shape)

    def trace(self) -> "Affine":
        p, q = self.shape
        if p != q:
            raise ValueError("trace() needs a square expression")
        return self.rows(np.arange(p) * (p + 1)).sum()

    def sum(self) -> "Affine":
        return np.ones((1, self.size)) @ self.reshape((self.size, 1))

    def __repr__(self) -> str:
        return f"Affine(shape={self.shape}, num_vars={self.num_vars}, nnz={self.coef.nnz})"

    # assembly

    @staticmethod
    def bmat(blocks: Sequence[Sequence]) -> "Affine":
        """
        Block matrix from a grid of expressions or constant arrays.

        Args:
            blocks: rows of blocks; heights agree along rows, widths along columns

        Returns:
            The assembled expression
        """
        grid: List[List[Affine]] = [[Affine.lift(b) for b in row] for row in blocks]
        heights = [row[0].shape[0] for row in grid]
        widths = [b.shape[1] for b in grid[0]]
        for row, height in zip(grid, heights):
            if len(row) != len(widths):
                raise ValueError("Block rows have different lengths")
            for b, width in zip(row, widths):
                if b.shape != (height, width):
                    raise ValueError(f"Block shape {b.shape} does not fit ({height}, {width})")
        H, W = sum(heights), sum(widths)
        n = max(b.num_vars for row in grid for b in row)

        parts, targets = [], []
        const = np.zeros(H * W, dtype=complex)
        r0 = 0
        for row, height in zip(grid, heights):
            c0 = 0
            for b, width in zip(row, widths):
                if b.size:
                    target = ((r0 + np.arange(height))[:, None] * W + (c0 + np.arange(width))[None, :]).ravel()
                    targets.append(target)
                    parts.append(b._cols(n))
                    const[target] = b.const
                c0 += width
            r0 += height
        if not parts:
            return Affine.zeros((H, W))
        order = np.concatenate(targets)
        stacked = sp.vstack(parts, format="csr")
        P = sp.csr_matrix((np.ones(order.size), (order, np.arange(order.size))), shape=(H * W, order.size))
        return Affine(P @ stacked, const, (H, W))

    @staticmethod
    def vstack(items: Sequence) -> "Affine":
        return Affine.bmat([[item] for item in items])

    @staticmethod
    def hstack(items: Sequence) -> "Affine":
        return Affine.bmat([list(items)])


def scalar_product(scalar, vector) -> Affine:
    """Product of a scalar and a vector where at most one of them varies."""
    s, v = Affine.lift(scalar), Affine.lift(vector)
    if s.is_constant:
        return v * complex(s.value().ravel()[0])
    if v.is_constant:
        return s.outer(v.value())
    raise TypeError("Product of two variable expressions is not affine")

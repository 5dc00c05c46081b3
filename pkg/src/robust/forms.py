"""
Quadratic forms in the stacked channel error and the first-order linearization
of |h̄w|² around an iterate.

The error of a link is stacked as x = [Δh; vec(ΔG*)] with vec taken column
by column, so x has N + MN entries. Every builder and oracle goes through
ErrorLayout for this ordering.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.conic import Affine, scalar_product

Operand = Union[Affine, np.ndarray]


@dataclass(frozen=True)
class ErrorLayout:
    N: int
    M: int

    @property
    def size(self) -> int:
        return self.N + self.M * self.N

    @property
    def h_slice(self) -> slice:
        return slice(0, self.N)

    @property
    def G_slice(self) -> slice:
        return slice(self.N, self.size)

    def stack(self, dh: np.ndarray, dG: np.ndarray) -> np.ndarray:
        dh = np.asarray(dh, dtype=complex).ravel()
        dG = np.asarray(dG, dtype=complex)
        if dh.size != self.N or dG.shape != (self.M, self.N):
            raise ValueError(f"Error shapes {dh.shape}, {dG.shape} do not match N={self.N}, M={self.M}")
        return np.concatenate([dh, dG.conj().ravel(order="F")])

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=complex).ravel()
        if x.size != self.size:
            raise ValueError(f"Stacked error has {x.size} entries, expected {self.size}")
        return x[self.h_slice], x[self.G_slice].reshape((self.M, self.N), order="F").conj()

    def selectors(self) -> Tuple[np.ndarray, np.ndarray]:
        """C1 picks Δh, C2 picks vec(ΔG*); C1 + C2 = I."""
        d = np.zeros(self.size)
        d[self.h_slice] = 1.0
        return np.diag(d), np.diag(1.0 - d)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """f(x) = x^H A x + 2Re(a^H x) + a0 with coefficients affine in the decision variables."""
    A: Affine
    a: Affine
    a0: Affine

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.a.shape != (n, 1) or self.a0.shape != (1, 1):
            raise ValueError(f"Inconsistent quadratic form shapes {self.A.shape}, {self.a.shape}, {self.a0.shape}")

    @classmethod
    def of(cls, A, a, a0) -> "QuadraticForm":
        a = Affine.lift(a)
        return cls(Affine.lift(A), a.reshape((a.size, 1)), Affine.lift(a0).reshape((1, 1)))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def shifted(self, offset) -> "QuadraticForm":
        """Same form with offset added to the constant term."""
        return QuadraticForm(self.A, self.a, self.a0 + offset)

    def restrict(self, keep: Sequence[int]) -> "QuadraticForm":
        keep = np.asarray(keep, dtype=int)
        return QuadraticForm(self.A[np.ix_(keep, keep)], self.a[keep, :], self.a0)

    def evaluate(self, x: np.ndarray, assignment: Optional[np.ndarray] = None) -> float:
        x = np.asarray(x, dtype=complex).ravel()
        A = self.A.value(assignment)
        a = self.a.value(assignment).ravel()
        a0 = self.a0.value(assignment)[0, 0]
        return float(np.real(x.conj() @ A @ x + 2 * np.real(a.conj() @ x) + a0))


@dataclass(frozen=True, eq=False)
class LinearizationCoefficients(QuadraticForm):
    """Lower-bounding form of |h̄w|² produced by linearize_signal_power."""
    layout: ErrorLayout = None


def combined_column(h_hat: np.ndarray, G_hat: np.ndarray, u: Optional[Operand]) -> Affine:
    """ĥ + Ĝ^H u as an N×1 expression; u=None means no surface contribution."""
    col = Affine.constant(np.asarray(h_hat, dtype=complex).reshape(-1, 1))
    if u is None:
        return col
    return col + np.asarray(G_hat, dtype=complex).conj().T @ Affine.lift(u).reshape((G_hat.shape[0], 1))


def error_coupling_vector(w: Operand, u: Operand) -> Affine:
    """
    v = [w; kron(w, conj(u))], so that conj(h̄w) = conj(ĉ) + v^H x.

    At most one of w and u may depend on decision variables.
    """
    w, u = Affine.lift(w), Affine.lift(u)
    n, m = w.size, u.size
    w = w.reshape((n, 1))
    u = u.reshape((m, 1))
    if u.is_constant:
        lower = np.kron(np.eye(n), u.value().conj()) @ w
    elif w.is_constant:
        lower = np.kron(w.value(), np.eye(m)) @ u.conj()
    else:
        raise TypeError("error_coupling_vector needs a constant beamformer or a constant passive vector")
    return Affine.vstack([w, lower])


def tangent_coefficients(v: Affine, c: Affine, v0: np.ndarray, c0: complex) -> QuadraticForm:
    """
    Coefficients of 2Re{conj(z0)·z} − |z0|² for z = c + x^H v and z0 = c0 + x^H v0.

    Returns:
        QuadraticForm with A = v v0^H + v0 v^H − v0 v0^H,
        a = conj(c0) v + conj(c) v0 − conj(c0) v0 and a0 = 2Re{conj(c0) c} − |c0|²
    """
    v0 = np.asarray(v0, dtype=complex).reshape(-1, 1)
    c0 = complex(c0)
    v, c = Affine.lift(v), Affine.lift(c).reshape((1, 1))
    A = v @ v0.conj().T + v0 @ v.H - v0 @ v0.conj().T
    a = v * np.conj(c0) + scalar_product(c.conj(), v0) - v0 * np.conj(c0)
    a0 = (c * np.conj(c0)).real() * 2.0 - abs(c0) ** 2
    return QuadraticForm.of(A, a, a0)


def linearize_signal_power(h_hat: np.ndarray, G_hat: np.ndarray, w: Operand, u: Operand,
                    w0: np.ndarray, u0: np.ndarray) -> LinearizationCoefficients:
    """
    Linearize |h̄w|² around the iterate (w0, u0) over the link's error.

    For every error x the returned form lower-bounds |h̄w|² and equals it at
    (w, u) = (w0, u0).

    Args:
        h_hat: estimated direct channel, length N
        G_hat: estimated cascaded channel, M×N
        w: beam, constant or affine in the decision variables
        u: passive vector, constant or affine
        w0: beam at the iterate
        u0: passive vector at the iterate

    Returns:
        LinearizationCoefficients over x = [Δh; vec(ΔG*)]
    """
    G_hat = np.asarray(G_hat, dtype=complex)
    M, N = G_hat.shape
    if np.size(h_hat) != N or Affine.lift(w).size != N or Affine.lift(u).size != M:
        raise ValueError(f"Dimension mismatch for N={N}, M={M}")
    w0 = np.asarray(w0, dtype=complex).reshape(-1, 1)
    u0 = np.asarray(u0, dtype=complex).reshape(-1, 1)
    comb0 = np.asarray(h_hat, dtype=complex).reshape(-1, 1) + G_hat.conj().T @ u0
    c0 = complex((comb0.conj().T @ w0)[0, 0])
    v0 = np.concatenate([w0, np.kron(w0, u0.conj())])

    w_col = Affine.lift(w).reshape((N, 1))
    c = combined_column(h_hat, G_hat, u).H @ w_col
    form = tangent_coefficients(error_coupling_vector(w, u), c, v0, c0)
    return LinearizationCoefficients(form.A, form.a, form.a0, ErrorLayout(N, M))

"""
Real conic programs and the model builder that lowers complex LMIs into them.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .affine import Affine

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10


class ConeKind(str, Enum):
    ZERO = "zero"
    NONNEG = "nonnegative"
    SOC = "second_order"
    PSD = "psd"


def svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def svec_operator(d: int) -> sp.csr_matrix:
    """
    Map a row-major flattened d×d matrix to its scaled lower-triangle vector.

    Off-diagonal entries are symmetrized and scaled by sqrt(2) so inner
    products are preserved.
    """
    rows, cols, vals = [], [], []
    r = 0
    for i, j in zip(*np.tril_indices(d)):
        if i == j:
            rows.append(r)
            cols.append(i * d + i)
            vals.append(1.0)
        else:
            w = np.sqrt(2.0) / 2.0
            rows += [r, r]
            cols += [i * d + j, j * d + i]
            vals += [w, w]
        r += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(svec_dim(d), d * d))


def smat_operator(d: int) -> sp.csr_matrix:
    """Inverse of svec_operator on symmetric matrices."""
    rows, cols, vals = [], [], []
    r = 0
    for i, j in zip(*np.tril_indices(d)):
        if i == j:
            rows.append(i * d + i)
            cols.append(r)
            vals.append(1.0)
        else:
            w = 1.0 / np.sqrt(2.0)
            rows += [i * d + j, j * d + i]
            cols += [r, r]
            vals += [w, w]
        r += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(d * d, svec_dim(d)))


def smat(vec: np.ndarray, d: int) -> np.ndarray:
    return (smat_operator(d) @ np.asarray(vec, dtype=float)).reshape(d, d)


def embed_hermitian(H: np.ndarray) -> np.ndarray:
    """
    Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix.

    Args:
        H: complex Hermitian n×n matrix

    Returns:
        Real symmetric 2n×2n matrix with every eigenvalue of H repeated twice
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"Hermitian embedding needs a square matrix, got shape {H.shape}")
    asym = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if asym > HERMITIAN_TOL * max(1.0, np.max(np.abs(H))):
        raise ValueError(f"Matrix is not Hermitian (max asymmetry {asym:.3e})")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def embed_hermitian_affine(H: Affine) -> Affine:
    """Same embedding applied to a matrix-valued affine expression."""
    if H.shape[0] != H.shape[1]:
        raise ValueError(f"Hermitian embedding needs a square expression, got {H.shape}")
    R, I = H.real(), H.imag()
    return Affine.bmat([[R, -I], [I, R]])


def real_stack(z: Affine) -> Affine:
    """Column [Re z; Im z] of a complex column expression."""
    z = Affine.lift(z)
    flat = z.reshape((z.size, 1))
    return Affine.vstack([flat.real(), flat.imag()])


def _real_csr(matrix: sp.csr_matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix)
    return sp.csr_matrix((m.data.real.astype(float), m.indices, m.indptr), shape=m.shape)


@dataclass(frozen=True, eq=False)
class ConeBlock:
    """One cone constraint: matrix @ x + offset lies in the cone."""
    name: str
    cone: ConeKind
    dim: int
    matrix: sp.csr_matrix
    offset: np.ndarray

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset


@dataclass(frozen=True, eq=False)
class ConicProgram:
    """
    Linear objective over a real vector subject to cone blocks.

    The maximize flag records the orientation; PSD blocks are stored in svec form.
    """
    num_vars: int
    objective: np.ndarray
    blocks: Tuple[ConeBlock, ...]
    maximize: bool = True
    objective_offset: float = 0.0
    variables: Tuple[Tuple[str, int, int], ...] = field(default_factory=tuple)
    name: str = ""

    def __post_init__(self):
        if self.objective.shape != (self.num_vars,):
            raise ValueError(f"Objective has shape {self.objective.shape}, expected ({self.num_vars},)")
        for block in self.blocks:
            if block.matrix.shape[1] != self.num_vars:
                raise ValueError(f"Block {block.name} references {block.matrix.shape[1]} variables, program has {self.num_vars}")
            if block.offset.shape != (block.rows,):
                raise ValueError(f"Block {block.name} offset does not match its rows")
            if block.cone is ConeKind.PSD and block.rows != svec_dim(block.dim):
                raise ValueError(f"PSD block {block.name} is not square")
            if block.rows < 1:
                raise ValueError(f"Block {block.name} is empty")

    def psd_blocks(self) -> List[ConeBlock]:
        return [b for b in self.blocks if b.cone is ConeKind.PSD]

    def variable_slice(self, name: str) -> slice:
        for var_name, start, size in self.variables:
            if var_name == name:
                return slice(start, start + size)
        raise KeyError(name)


class ConicModel:
    """
    Incremental builder for a ConicProgram.

    Variables are handed out as Affine expressions; constraints are recorded in
    insertion order and lowered to real cone blocks by build().
    """

    def __init__(self, name: str = ""):
        self.name = name
        self.num_vars = 0
        self._variables: List[Tuple[str, int, int]] = []
        self._blocks: List[Tuple[str, ConeKind, int, Affine]] = []
        self._objective: Optional[Affine] = None
        self._maximize = True

    def real(self, name: str, shape: Tuple[int, int] = (1, 1)) -> Affine:
        start = self.num_vars
        size = shape[0] * shape[1]
        self._variables.append((name, start, size))
        self.num_vars += size
        return Affine.variable(start, shape)

    def complex(self, name: str, shape: Tuple[int, int] = (1, 1)) -> Affine:
        re = self.real(f"{name}.re", shape)
        im = self.real(f"{name}.im", shape)
        return re + im * 1j

    def add_zero(self, expr, name: str) -> None:
        expr = Affine.lift(expr)
        self._blocks.append((name, ConeKind.ZERO, expr.size, expr.real()))

    def add_nonneg(self, expr, name: str) -> None:
        expr = Affine.lift(expr)
        self._blocks.append((name, ConeKind.NONNEG, expr.size, expr.real()))

    def add_soc(self, head, tail, name: str) -> None:
        """head ≥ ‖tail‖₂ with a real scalar head and a real column tail."""
        head, tail = Affine.lift(head), Affine.lift(tail)
        if head.size != 1:
            raise ValueError("SOC head must be scalar")
        stacked = Affine.vstack([head.reshape((1, 1)), tail.reshape((tail.size, 1))]).real()
        self._blocks.append((name, ConeKind.SOC, stacked.size, stacked))

    def add_psd(self, matrix, name: str) -> None:
        """Complex Hermitian matrix expression ⪰ 0, embedded as a real block."""
        matrix = Affine.lift(matrix)
        embedded = embed_hermitian_affine(matrix)
        self._blocks.append((name, ConeKind.PSD, embedded.shape[0], embedded))

    def maximize(self, expr) -> None:
        self._objective, self._maximize = Affine.lift(expr), True

    def minimize(self, expr) -> None:
        self._objective, self._maximize = Affine.lift(expr), False

    def build(self) -> ConicProgram:
        n = self.num_vars
        blocks = []
        for name, cone, dim, expr in self._blocks:
            coef = _real_csr(expr._cols(n))
            const = expr.const.real.astype(float)
            if cone is ConeKind.PSD:
                S = svec_operator(dim)
                coef, const = sp.csr_matrix(S @ coef), S @ const
            blocks.append(ConeBlock(name, cone, dim, coef, np.asarray(const, dtype=float)))
        objective = np.zeros(n)
        offset = 0.0
        if self._objective is not None:
            if self._objective.size != 1:
                raise ValueError("Objective must be scalar")
            objective = np.asarray(_real_csr(self._objective._cols(n)).todense()).ravel()
            offset = float(self._objective.const.real[0])
        return ConicProgram(n, objective, tuple(blocks), self._maximize, offset, tuple(self._variables), self.name)


def dump_program(program: ConicProgram, path: str) -> None:
    """
    Write a structured text summary of a program for diffing.

    Args:
        program: program to describe
        path: destination file
    """
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"name {program.name or '-'}\n")
            fh.write(f"num_vars {program.num_vars}\n")
            fh.write(f"sense {'maximize' if program.maximize else 'minimize'}\n")
            nz = np.flatnonzero(program.objective)
            fh.write(f"objective_nnz {nz.size} offset {program.objective_offset:.17g}\n")
            for idx in nz:
                fh.write(f"  c {idx} {program.objective[idx]:.17g}\n")
            for name, start, size in program.variables:
                fh.write(f"var {name} {start} {size}\n")
            for i, block in enumerate(program.blocks):
                fh.write(f"block {i} {block.name} {block.cone.value} dim {block.dim} rows {block.rows} nnz {block.matrix.nnz}\n")
    except OSError as e:
        logger.error(f"Failed to write program dump {path}: {str(e)}")
        raise

"""
LMI certificates for the semi-infinite rate constraints.

Lower bounds on a received power go through the S-procedure over the two
error balls of a link; upper bounds go through a Schur complement followed by
the general sign-definiteness lemma.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.conic import Affine, ConicModel
from .forms import ErrorLayout, QuadraticForm, combined_column, linearize_signal_power

logger = logging.getLogger(__name__)

Operand = Union[Affine, np.ndarray]
MultiplierFactory = Callable[[str], Union[Affine, float]]


@dataclass(frozen=True, eq=False)
class LmiBlock:
    """Hermitian matrix expression required to be PSD."""
    name: str
    matrix: Affine
    multipliers: Tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.size == 1

    def evaluate(self, assignment: Optional[np.ndarray] = None) -> np.ndarray:
        return self.matrix.value(assignment)

    def min_eigenvalue(self, assignment: Optional[np.ndarray] = None) -> float:
        H = self.evaluate(assignment)
        return float(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0])

    def add_to(self, model: ConicModel) -> None:
        if self.is_scalar:
            model.add_nonneg(self.matrix.real(), self.name)
        else:
            model.add_psd(self.matrix, self.name)


def _check_multiplier(value, name: str) -> Affine:
    if not isinstance(value, Affine):
        if float(np.real(value)) < 0:
            raise ValueError(f"Multiplier {name} must be nonnegative, got {value}")
    return Affine.lift(value)


def ball_constraints(layout: ErrorLayout, xi: float, zeta: float) -> List[QuadraticForm]:
    """ξ² − x^H C1 x ≥ 0 and ζ² − x^H C2 x ≥ 0."""
    C1, C2 = layout.selectors()
    n = layout.size
    return [QuadraticForm.of(-C1, np.zeros(n), xi ** 2), QuadraticForm.of(-C2, np.zeros(n), zeta ** 2)]


def s_procedure_assemble(f0: QuadraticForm, constraints: Sequence[QuadraticForm], multipliers: Sequence,
                         name: str = "", multiplier_names: Sequence[str] = ()) -> LmiBlock:
    """
    Certificate that f_i(x) ≥ 0 for all i implies f0(x) ≥ 0.

    Args:
        f0: implied form
        constraints: hypothesis forms
        multipliers: one nonnegative scalar (number or expression) per constraint
        name: block name
        multiplier_names: names recorded on the block

    Returns:
        LmiBlock [[A0, a0], [a0^H, a00]] − Σ υ_i [[A_i, a_i], [a_i^H, a_i0]]
    """
    if len(constraints) != len(multipliers):
        raise ValueError("One multiplier per constraint is required")
    block = Affine.bmat([[f0.A, f0.a], [f0.a.H, f0.a0]])
    for i, (fi, mu) in enumerate(zip(constraints, multipliers)):
        mu = _check_multiplier(mu, f"{name}[{i}]")
        if not (fi.A.is_constant and fi.a.is_constant and fi.a0.is_constant):
            raise ValueError("S-procedure hypotheses must have constant coefficients")
        Mi = np.block([[fi.A.value(), fi.a.value()], [fi.a.value().conj().T, fi.a0.value()]])
        block = block - mu * Mi
    return LmiBlock(name, block, tuple(multiplier_names))


@dataclass(frozen=True, eq=False)
class Perturbation:
    """
    One norm-bounded perturbation F^H X E + E^H X^H F with ‖X‖ ≤ radius.

    gram holds F^H F, evaluated at the iterate when F depends on u.
    """
    E: Affine
    gram: np.ndarray
    radius: float
    tag: str
    F: Optional[np.ndarray] = None

    @property
    def rows(self) -> int:
        return self.E.shape[0]


def sign_definiteness_assemble(A: Operand, perturbations: Sequence[Perturbation], multipliers: Sequence,
                               name: str = "") -> LmiBlock:
    """
    Bordered LMI certifying A ⪰ Σ_i (F_i^H X_i E_i + E_i^H X_i^H F_i) for all ‖X_i‖ ≤ ξ_i.

    Args:
        A: Hermitian core
        perturbations: E_i, F_i^H F_i and ξ_i per uncertain term
        multipliers: ϖ_i, one per perturbation

    Returns:
        LmiBlock [[A − Σϖ_i F_i^H F_i, −ξ_i E_i^H ...], [−ξ_i E_i, ϖ_i I, ...]]
    """
    if len(perturbations) != len(multipliers):
        raise ValueError("One multiplier per perturbation is required")
    A = Affine.lift(A)
    top = A
    mults = []
    for p, m in zip(perturbations, multipliers):
        if p.radius < 0:
            raise ValueError(f"Perturbation radius must be nonnegative, got {p.radius}")
        m = _check_multiplier(m, f"{name}.{p.tag}")
        mults.append(m)
        top = top - m * np.asarray(p.gram, dtype=complex)
    rows = [[top] + [p.E.H * (-p.radius) for p in perturbations]]
    for i, p in enumerate(perturbations):
        row = [p.E * (-p.radius)]
        for j, q in enumerate(perturbations):
            row.append(mults[i] * np.eye(p.rows) if i == j else np.zeros((p.rows, q.rows)))
        rows.append(row)
    return LmiBlock(name, Affine.bmat(rows), tuple(p.tag for p in perturbations))


def schur_core(T: Operand, pi: Operand) -> Affine:
    """[[T, π^H], [π, I_n]]: PSD iff ‖π‖² ≤ T."""
    pi = Affine.lift(pi)
    n = pi.size
    pi = pi.reshape((n, 1))
    return Affine.bmat([[Affine.lift(T).reshape((1, 1)), pi.H], [pi, np.eye(n)]])


@dataclass(frozen=True, eq=False)
class SchurForm:
    core: Affine
    perturbations: Tuple[Perturbation, ...]


def schur_expand(W: Operand, u: Optional[Operand], h_hat: np.ndarray, G_hat: np.ndarray, T: Operand,
                 xi: float, zeta: float, u_norm2: Optional[float] = None) -> SchurForm:
    """
    Schur form of ‖h̄W‖² ≤ T with its two error-coupling terms.

    Args:
        W: interference beams, N×n
        u: passive vector seen by the receiver, or None for no surface path
        h_hat, G_hat: estimated channels
        T: right-hand side after moving the noise term
        xi, zeta: error radii
        u_norm2: ‖u‖² to use in the ΔG term; required when u varies

    Returns:
        Core [[T, π^H], [π, I]] with π = W^H(ĥ + Ĝ^H u) and the Δh / ΔG perturbations
    """
    W = Affine.lift(W)
    N, n = W.shape
    pi = W.H @ combined_column(h_hat, G_hat, u)
    core = schur_core(T, pi)
    E = Affine.hstack([np.zeros((N, 1)), W])
    e0 = np.zeros((1, n + 1))
    e0[0, 0] = 1.0
    perts = [Perturbation(E, e0.T @ e0, xi, "h", e0)]
    if u is not None:
        if u_norm2 is None:
            u_lift = Affine.lift(u)
            if not u_lift.is_constant:
                raise ValueError("u_norm2 is required when the passive vector varies")
            u_norm2 = float(np.linalg.norm(u_lift.value()) ** 2)
        F = None if not Affine.lift(u).is_constant else Affine.lift(u).value().reshape(-1, 1) @ e0
        perts.append(Perturbation(E, u_norm2 * (e0.T @ e0), zeta, "G", F))
    return SchurForm(core, tuple(perts))


def _active(perturbations: Sequence[Perturbation]) -> List[Perturbation]:
    return [p for p in perturbations if p.radius > 0 and np.any(p.gram)]


def robust_upper_lmi(name: str, W: Operand, u: Optional[Operand], h_hat: np.ndarray, G_hat: np.ndarray,
                     T: Operand, xi: float, zeta: float, multiplier: MultiplierFactory,
                     u_norm2: Optional[float] = None) -> LmiBlock:
    """
    Robust ‖h̄W‖² ≤ T over both error balls.

    Zero-radius terms are dropped; with both radii zero the block is the
    nominal Schur core.
    """
    form = schur_expand(W, u, h_hat, G_hat, T, xi, zeta, u_norm2)
    perts = _active(form.perturbations)
    if not perts:
        return LmiBlock(name, form.core)
    mults = [multiplier(p.tag) for p in perts]
    return sign_definiteness_assemble(form.core, perts, mults, name)


def robust_lower_lmi(name: str, form: QuadraticForm, rhs: Operand, layout: ErrorLayout, xi: float, zeta: float,
                     multiplier: MultiplierFactory) -> LmiBlock:
    """
    Robust f(x) ≥ rhs for ‖Δh‖ ≤ ξ and ‖ΔG‖_F ≤ ζ through the S-procedure.

    Error components with zero radius are removed; with both radii zero the
    block reduces to the scalar a0 − rhs ≥ 0.
    """
    f0 = form.shifted(-Affine.lift(rhs).reshape((1, 1)))
    keep, hyps, tags = [], [], []
    C1, C2 = layout.selectors()
    if xi > 0:
        keep.extend(range(layout.h_slice.start, layout.h_slice.stop))
    if zeta > 0:
        keep.extend(range(layout.G_slice.start, layout.G_slice.stop))
    if not keep:
        return LmiBlock(name, f0.a0)
    keep = np.asarray(keep)
    f0 = f0.restrict(keep) if keep.size < layout.size else f0
    for C, radius, tag in ((C1, xi, "h"), (C2, zeta, "G")):
        if radius > 0:
            Ck = C[np.ix_(keep, keep)]
            hyps.append(QuadraticForm.of(-Ck, np.zeros(keep.size), radius ** 2))
            tags.append(tag)
    mults = [multiplier(t) for t in tags]
    return s_procedure_assemble(f0, hyps, mults, name, tags)


def robust_signal_lmi(name: str, h_hat: np.ndarray, G_hat: np.ndarray, xi: float, zeta: float,
                      w: Operand, u: Operand, w0: np.ndarray, u0: np.ndarray, rhs: Operand,
                      multiplier: MultiplierFactory) -> LmiBlock:
    """Robust |h̄w|² ≥ rhs via the linearized form around (w0, u0)."""
    coeffs = linearize_signal_power(h_hat, G_hat, w, u, w0, u0)
    return robust_lower_lmi(name, coeffs, rhs, coeffs.layout, xi, zeta, multiplier)


def robust_interference_lower_lmi(name: str, W: Operand, u: Optional[Operand], W0: np.ndarray,
                                  u0: Optional[np.ndarray], h_hat: np.ndarray, G_hat: np.ndarray,
                                  bound: Operand, xi: float, zeta: float, multiplier: MultiplierFactory,
                                  u_norm2: Optional[float] = None) -> LmiBlock:
    """
    Robust ‖h̄W‖² ≥ bound.

    ‖π‖² is replaced by its tangent 2Re{π0^H π} − ‖π0‖² at the nominal
    iterate π0, and the resulting affine inequality is made robust with the
    sign-definiteness lemma. The block has size 2N+1 with both balls active.

    Args:
        W, u: current beams and passive vector (u None: no surface path)
        W0, u0: their values at the iterate
        bound: required lower bound, e.g. η^e − σ²
    """
    W = Affine.lift(W)
    N, n = W.shape
    W0 = np.asarray(W0, dtype=complex).reshape(N, n)
    comb0 = combined_column(h_hat, G_hat, u0).value()
    pi0 = W0.conj().T @ comb0
    pi = W.H @ combined_column(h_hat, G_hat, u)
    s0 = (pi0.conj().T @ pi).real() * 2.0 - float(np.linalg.norm(pi0) ** 2) - Affine.lift(bound).reshape((1, 1))
    E = -(W @ pi0)
    one = np.ones((1, 1))
    perts = [Perturbation(E, one, xi, "h", one)]
    if u is not None:
        if u_norm2 is None:
            u_norm2 = float(np.linalg.norm(Affine.lift(u).value()) ** 2)
        perts.append(Perturbation(E, u_norm2 * one, zeta, "G"))
    perts = _active(perts)
    if not perts:
        return LmiBlock(name, s0)
    mults = [multiplier(p.tag) for p in perts]
    return sign_definiteness_assemble(s0, perts, mults, name)

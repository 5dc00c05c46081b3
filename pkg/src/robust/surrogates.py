"""
Convex surrogates used by the SCA outer loop.
"""
from typing import Sequence, Tuple, Union

import numpy as np

from src.conic import Affine, real_stack

Scalar = Union[Affine, float]

LN2 = np.log(2.0)


def sca_eta_bound(eta: Scalar, r: Scalar, eta0: float, r0: float) -> Scalar:
    """
    Tangent of η·2^r at (η0, r0): ((r − r0)·η0·ln2 + η)·2^r0.

    Works on numbers and on affine expressions alike.
    """
    if eta0 <= 0:
        raise ValueError(f"Expansion point eta0 must be positive, got {eta0}")
    scale = 2.0 ** r0
    return (r - r0) * (eta0 * LN2 * scale) + eta * scale


def bilinear_upper_bound(psi: float, rho: float, t: float) -> float:
    """(t/2)ψ² + ρ²/(2t), which dominates ψρ with equality at t = ρ/ψ."""
    if t <= 0:
        raise ValueError(f"SCA point t must be positive, got {t}")
    return 0.5 * t * psi ** 2 + rho ** 2 / (2.0 * t)


def bilinear_soc(psi: Affine, rho: Affine, total: Affine, t: float) -> Tuple[Affine, Affine]:
    """
    Cone form of total ≥ (t/2)ψ² + ρ²/(2t).

    Returns:
        (head, tail) with head = 2·total + 1 and tail = [2√t ψ; 2ρ/√t; 2·total − 1]
    """
    if t <= 0:
        raise ValueError(f"SCA point t must be positive, got {t}")
    st = np.sqrt(t)
    tail = Affine.vstack([
        Affine.lift(psi).reshape((1, 1)) * (2.0 * st),
        Affine.lift(rho).reshape((1, 1)) * (2.0 / st),
        Affine.lift(total).reshape((1, 1)) * 2.0 - 1.0,
    ])
    return Affine.lift(total) * 2.0 + 1.0, tail


def soc_power_constraint(rho: Scalar, beams: Sequence, efficiency: float, static_power: float
                         ) -> Tuple[Affine, Affine]:
    """
    Cone form of ϱ·Σ‖f_k‖² + P0 ≤ ρ.

    Args:
        rho: power epigraph variable
        beams: f_k for every space, constants or expressions
        efficiency: ϱ
        static_power: P0

    Returns:
        (head, tail) with head = (ρ − P0 + ϱ)/(2ϱ) and
        tail = [(ρ − P0 − ϱ)/(2ϱ); Re f; Im f]
    """
    if efficiency <= 0:
        raise ValueError(f"Amplifier efficiency must be positive, got {efficiency}")
    rho = Affine.lift(rho).reshape((1, 1))
    head = (rho - static_power + efficiency) / (2.0 * efficiency)
    first = (rho - static_power - efficiency) / (2.0 * efficiency)
    parts = [first] + [real_stack(f) for f in beams]
    return head, Affine.vstack(parts)


def soc_holds(head: Affine, tail: Affine, assignment=None, tol: float = 0.0) -> bool:
    h = float(np.real(head.value(assignment)).ravel()[0])
    return h + tol >= float(np.linalg.norm(np.real(tail.value(assignment))))

"""
Interior-point complexity estimate and LMI inventory of the subproblems.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.conic import ConicProgram
from src.metrics import Protocol
from .subproblems import FAMILIES

logger = logging.getLogger(__name__)


def block_inventory(N: int, M: int, J_r: int, J_t: int, protocol: Protocol = Protocol.ES,
                    h_error: bool = True, g_error: bool = True) -> Dict[str, int]:
    """
    Complex size of every LMI block the subproblems build, keyed by block name.

    Args:
        N, M: antennas and surface elements
        J_r, J_t: Bobs per space
        protocol: TS drops the other-space beam and the off-space surface path
        h_error, g_error: whether the direct / cascaded error radii are positive

    Returns:
        Mapping name -> size; blocks that degenerate to scalars are omitted
    """
    for name, value in (("N", N), ("M", M)):
        if value < 1:
            raise ValueError(f"{name} must be positive, got {value}")
    users = (J_r, J_t)
    ts = Protocol(protocol) is Protocol.TS
    lower = N * h_error + M * N * g_error + 1
    blocks = {}

    def add(name: str, size: int) -> None:
        if size > 1:
            blocks[name] = size

    for k in range(2):
        other = not ts and users[1 - k] > 0
        for j in range(users[k]):
            n = j + other
            for l in range(j + 1):
                add(f"bob_signal[{k},{j},{l}]", lower)
                if n:
                    add(f"bob_interference[{k},{j},{l}]", n + 1 + N * h_error + N * g_error)
            for e in range(2):
                has_u = not ts or e == k
                add(f"eve_signal[{k},{j},{e}]", 2 + N * h_error + N * (g_error and has_u))
                if n:
                    add(f"eve_interference[{k},{j},{e}]", 1 + N * h_error + N * (g_error and has_u))
        for j in range(users[k] - 1):
            add(f"order_lower[{k},{j}]", lower)
            add(f"order_upper[{k},{j}]", 2 + N * h_error + N * g_error)
    return blocks


def program_inventory(program: ConicProgram) -> Dict[str, int]:
    """Complex size of every PSD block in a built program (the real embedding doubles it)."""
    return {b.name: b.dim // 2 for b in program.psd_blocks()}


def cross_check(program: ConicProgram, expected: Dict[str, int]) -> List[str]:
    """Differences between a built program's LMIs and a predicted inventory; empty when they agree."""
    actual = program_inventory(program)
    problems = []
    for name in sorted(set(actual) | set(expected)):
        if actual.get(name) != expected.get(name):
            problems.append(f"{name}: built {actual.get(name)}, predicted {expected.get(name)}")
    if problems:
        logger.warning(f"{program.name}: {len(problems)} LMI blocks differ from the inventory")
    return problems


@dataclass(frozen=True)
class ComplexityEstimate:
    n1: int
    n2: int
    n3: int
    a1: int
    a2: Tuple[int, ...]
    a3: int
    a4: int
    sigma: int
    order_pairs: int
    eve_blocks: int
    f1: int
    f2: int
    f3: int
    O_alpha: float
    O_F: float
    O_Phi: float
    inventory_f: Tuple[int, int, int] = (0, 0, 0)
    mismatches: Tuple[str, ...] = ()

    def as_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def closed_form_families(N: int, M: int, J_r: int, J_t: int) -> Dict[str, List[int]]:
    """
    Block sizes per family as tabulated for the active-beamforming subproblem.

    Stream j (from 1) of a space contributes j signal and j interference
    blocks of sizes a1 and a2(j), and two Eve pairs of sizes a2(j) and a3.
    Each consecutive Bob pair adds one a1 and one a3 block.
    """
    a1, a3 = M * N + N + 1, 2 * N + 2
    families = {name: [] for name in FAMILIES}
    for Jk in (J_r, J_t):
        for j in range(1, Jk + 1):
            a2 = 2 * N + j + 1
            families["bob_signal"] += [a1] * j
            families["bob_interference"] += [a2] * j
            families["eve_signal"] += [a3] * 2
            families["eve_interference"] += [a2] * 2
        families["order_lower"] += [a1] * max(Jk - 1, 0)
        families["order_upper"] += [a3] * max(Jk - 1, 0)
    return families


def family_mismatches(N: int, M: int, J_r: int, J_t: int) -> List[str]:
    """Families whose built block sizes differ from the tabulated ones."""
    built = {name: [] for name in FAMILIES}
    for name, size in block_inventory(N, M, J_r, J_t).items():
        built[name.split("[")[0]].append(size)
    tabulated = closed_form_families(N, M, J_r, J_t)
    return [f"{name}: built {sorted(built[name])}, tabulated {sorted(tabulated[name])}"
            for name in FAMILIES if sorted(built[name]) != sorted(tabulated[name])]


def complexity_estimate(N: int, M: int, J_r: int, J_t: int) -> ComplexityEstimate:
    """
    Worst-case interior-point operation counts of the three AO blocks.

    a1 = MN+N+1 (S-procedure blocks), a2 = 2N+j+1 (interference of the j-th
    stream, j from 1) and a3 = 2N+2 (Eve signal and order upper bound). f1,
    f2, f3 are the tabulated sums of sizes, squares and cubes. The built Eve
    interference blocks have size a4 = 2N+1 whatever the number of
    interfering beams; inventory_f holds the sums over the built
    blocks and mismatches lists every family where the two disagree.
    """
    if J_r < 0 or J_t < 0 or J_r + J_t < 1:
        raise ValueError(f"Need at least one Bob, got J_r={J_r}, J_t={J_t}")
    tabulated = np.array([s for sizes in closed_form_families(N, M, J_r, J_t).values() for s in sizes],
                         dtype=float)
    built = np.array(list(block_inventory(N, M, J_r, J_t).values()), dtype=float)
    J = J_r + J_t
    f1, f2, f3 = (int(np.sum(tabulated ** p)) for p in (1, 2, 3))
    mismatches = family_mismatches(N, M, J_r, J_t)
    if mismatches:
        logger.debug(f"Built blocks differ from the tabulated sizes: {mismatches}")
    n1, n2, n3 = J, 2 * N, 2 * M
    O_alpha = np.sqrt(f1) * n1 * (n1 ** 2 + n1 * f2 + f3)
    O_F = np.sqrt(f1 + 2) * n2 * (n2 ** 2 + n2 * f2 + f3 + (2 * N + 1) ** 2 * n2)
    O_Phi = np.sqrt(f1 + 4 * M) * n3 * (n3 ** 2 + n3 * f2 + f3 + 2 * M * n3)
    return ComplexityEstimate(
        n1=n1, n2=n2, n3=n3,
        a1=M * N + N + 1,
        a2=tuple(2 * N + j + 1 for j in range(1, max(J_r, J_t) + 1)),
        a3=2 * N + 2,
        a4=2 * N + 1,
        sigma=sum(j for Jk in (J_r, J_t) for j in range(1, Jk + 1)),
        order_pairs=sum(max(Jk - 1, 0) for Jk in (J_r, J_t)),
        eve_blocks=2 * J,
        f1=f1, f2=f2, f3=f3,
        O_alpha=float(O_alpha), O_F=float(O_F), O_Phi=float(O_Phi),
        inventory_f=tuple(int(np.sum(built ** p)) for p in (1, 2, 3)),
        mismatches=tuple(mismatches),
    )

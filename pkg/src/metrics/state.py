"""
Beamforming state shared by the optimizer and the metric kernels.
"""
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

STATE_TOL = 1e-6


class Protocol(str, Enum):
    ES = "ES"
    MS = "MS"
    TS = "TS"
    SF = "SF"

    @property
    def binary_amplitudes(self) -> bool:
        return self in (Protocol.MS, Protocol.SF)


def sf_mask(m: int) -> np.ndarray:
    """Reflection mask of the fixed split: the first floor(M/2) elements reflect."""
    mask = np.zeros(m, dtype=bool)
    mask[: m // 2] = True
    return mask


@dataclass(frozen=True, eq=False)
class BeamformingState:
    """
    Decision variables of one scheme.

    Index 0 is the reflection space and index 1 the transmission space.
    alpha[k] has one entry per Bob of space k in decoding order.
    """
    protocol: Protocol
    alpha: Tuple[np.ndarray, np.ndarray]
    f: Tuple[np.ndarray, np.ndarray]
    u: Tuple[np.ndarray, np.ndarray]
    tau: Optional[Tuple[float, float]] = None

    def w(self, k: int, j: int) -> np.ndarray:
        return self.alpha[k][j] * self.f[k]

    def users(self, k: int) -> int:
        return len(self.alpha[k])

    def interference(self, k: int, j: int, ts: bool = False) -> np.ndarray:
        """
        Interference beams of s_{k,j} as columns of an N×n matrix.

        Earlier-decoded beams of the same cluster, plus the other space's
        beamformer unless time switching separates the spaces or that
        space has no Bobs.
        """
        cols = [self.alpha[k][i] * self.f[k] for i in range(j)]
        other = 1 - k
        if not ts and self.users(other) > 0:
            cols.append(self.f[other])
        n = self.f[k].size
        if not cols:
            return np.zeros((n, 0), dtype=complex)
        return np.stack(cols, axis=1)

    @property
    def beta(self) -> Tuple[np.ndarray, np.ndarray]:
        return tuple(np.abs(u) ** 2 for u in self.u)

    def with_(self, **changes) -> "BeamformingState":
        return replace(self, **changes)

    def check(self, tol: float = STATE_TOL) -> None:
        """
        Validate the protocol invariants.

        Raises:
            ValueError: naming the violated invariant
        """
        for k in range(2):
            a = np.asarray(self.alpha[k], dtype=float)
            if a.size and abs(np.sum(a ** 2) - 1) > tol:
                raise ValueError(f"Power allocation of space {k} has squared norm {np.sum(a ** 2):.6g}, expected 1")
        beta_r, beta_t = self.beta
        if self.protocol is Protocol.TS:
            for k in range(2):
                if np.max(np.abs(np.abs(self.u[k]) - 1), initial=0.0) > tol:
                    raise ValueError(f"TS passive vector of space {k} is not unit modulus")
            if self.tau is None or abs(sum(self.tau) - 1) > tol or min(self.tau) < 0:
                raise ValueError(f"TS time split {self.tau} must be nonnegative and sum to 1")
            return
        if np.max(np.abs(beta_r + beta_t - 1), initial=0.0) > 10 * tol:
            raise ValueError("Amplitudes must satisfy beta_r + beta_t = 1 per element")
        if np.min(np.concatenate([beta_r, beta_t])) < -tol:
            raise ValueError("Amplitudes must be nonnegative")
        if self.protocol.binary_amplitudes:
            if np.max(np.minimum(beta_r, 1 - beta_r)) > 10 * tol:
                raise ValueError(f"{self.protocol.value} amplitudes must be binary")
        if self.protocol is Protocol.SF:
            if not np.array_equal(beta_r > 0.5, sf_mask(beta_r.size)):
                raise ValueError("SF amplitudes must follow the fixed element split")


def state_from_amplitudes(protocol: Protocol, alpha, f, beta_r: np.ndarray, phases_r: np.ndarray,
                          phases_t: np.ndarray, tau=None) -> BeamformingState:
    """Assemble u_k = sqrt(beta_k)·exp(i·theta_k) with beta_t = 1 - beta_r."""
    beta_r = np.clip(np.asarray(beta_r, dtype=float), 0.0, 1.0)
    u_r = np.sqrt(beta_r) * np.exp(1j * np.asarray(phases_r))
    u_t = np.sqrt(1 - beta_r) * np.exp(1j * np.asarray(phases_t))
    return BeamformingState(protocol, tuple(np.asarray(a, dtype=float) for a in alpha),
                            tuple(np.asarray(x, dtype=complex) for x in f), (u_r, u_t), tau)

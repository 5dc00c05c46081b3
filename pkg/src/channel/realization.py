"""
Network drops, Rician channel realizations and bounded estimation errors.

Channels are stored so that a user's combined row channel is
h^H + u^H G with G = diag(g^H) H_b.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .params import NUM_EVES, Geometry, SystemParams, UncertaintyConfig

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.Generator, None]


def path_loss(d: float, alpha: float, reference: float = 1e-3) -> float:
    """
    Large-scale power gain reference·d^-alpha.

    Args:
        d: link distance in meters
        alpha: path-loss exponent
        reference: gain at 1 m (linear)

    Returns:
        Linear power gain
    """
    if d <= 0:
        raise ValueError(f"Distance must be positive, got {d}")
    return reference * d ** (-alpha)


def ula_steering(n: int, cos_angle: float) -> np.ndarray:
    """Half-wavelength ULA response exp(iπ n cosθ), n = 0..N-1."""
    return np.exp(1j * np.pi * np.arange(n) * cos_angle)


def ris_shape(m: int) -> Tuple[int, int]:
    """(M_x, M_z) with M_z the largest divisor of m not above sqrt(m)."""
    mz = max(d for d in range(1, int(np.sqrt(m)) + 1) if m % d == 0)
    return m // mz, mz


def upa_steering(m: int, direction: np.ndarray) -> np.ndarray:
    """Half-wavelength UPA response of an array lying in the x–z plane."""
    mx, mz = ris_shape(m)
    ix, iz = np.meshgrid(np.arange(mx), np.arange(mz), indexing="ij")
    return np.exp(1j * np.pi * (ix.ravel() * direction[0] + iz.ravel() * direction[2]))


def _unit(src: Sequence[float], dst: Sequence[float]) -> Tuple[np.ndarray, float]:
    delta = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    d = float(np.linalg.norm(delta))
    if d <= 0:
        raise ValueError(f"Coincident nodes at {tuple(src)}")
    return delta / d, d


def _rician(los: np.ndarray, nu: float, gain: float, rng: np.random.Generator) -> np.ndarray:
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / np.sqrt(2)
    return np.sqrt(gain) * (np.sqrt(nu / (nu + 1)) * los + np.sqrt(1 / (nu + 1)) * nlos)


def cascaded_channel(g: np.ndarray, H_b: np.ndarray) -> np.ndarray:
    """
    Cascaded BS→surface→user channel diag(g^H) H_b.

    Args:
        g: surface→user channel, length M
        H_b: BS→surface channel, M×N

    Returns:
        M×N matrix whose row m is conj(g_m)·H_b[m]
    """
    g = np.asarray(g, dtype=complex).ravel()
    H_b = np.asarray(H_b, dtype=complex)
    if H_b.ndim != 2 or H_b.shape[0] != g.size:
        raise ValueError(f"Cascaded channel needs g of length {H_b.shape[0]}, got {g.size}")
    return g.conj()[:, None] * H_b


def sample_uncertainty_ball(radius: float, shape: Tuple[int, ...], seed: Seed = None,
                            size: Optional[int] = None) -> np.ndarray:
    """
    Draw complex errors uniformly from the norm ball of the given radius.

    The norm is the 2-norm for vectors and the Frobenius norm for matrices.

    Args:
        radius: ball radius, >= 0
        shape: shape of one error
        seed: integer seed or an existing Generator
        size: number of draws; None returns a single error

    Returns:
        Array of shape `shape`, or (size, *shape)
    """
    if radius < 0:
        raise ValueError(f"Ball radius must be nonnegative, got {radius}")
    rng = np.random.default_rng(seed)
    count = 1 if size is None else size
    n = int(np.prod(shape))
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radial = radius * rng.uniform(size=(count, 1)) ** (1.0 / (2 * n))
    out = (z / norms * radial).reshape((count,) + tuple(shape))
    return out[0] if size is None else out


@dataclass(frozen=True, eq=False)
class Link:
    """Estimated and true channels of one user plus its error radii."""
    space: int
    position: Tuple[float, float, float]
    h_hat: np.ndarray
    g_hat: np.ndarray
    G_hat: np.ndarray
    h: np.ndarray
    G: np.ndarray
    xi: float
    zeta: float

    @property
    def gain(self) -> float:
        return float(np.linalg.norm(self.h_hat) ** 2 + np.linalg.norm(self.G_hat) ** 2)

    @property
    def perfect(self) -> bool:
        return self.xi == 0 and self.zeta == 0

    def scaled(self, factor: float) -> "Link":
        return replace(self, h_hat=self.h_hat * factor, g_hat=self.g_hat * factor, G_hat=self.G_hat * factor,
                       h=self.h * factor, G=self.G * factor, xi=self.xi * factor, zeta=self.zeta * factor)

    def with_truth(self, rng: np.random.Generator) -> "Link":
        dh = sample_uncertainty_ball(self.xi, self.h_hat.shape, rng)
        dG = sample_uncertainty_ball(self.zeta, self.G_hat.shape, rng)
        return replace(self, h=self.h_hat + dh, G=self.G_hat + dG)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """
    One network drop.

    bobs[k] holds the Bobs of space k (0 = reflection, 1 = transmission)
    sorted by estimated gain, strongest first; eves[k] is the Eve of space k.
    """
    H_b: np.ndarray
    bobs: Tuple[Tuple[Link, ...], Tuple[Link, ...]]
    eves: Tuple[Link, ...]
    seed: Optional[int] = None

    @property
    def N(self) -> int:
        return self.H_b.shape[1]

    @property
    def M(self) -> int:
        return self.H_b.shape[0]

    def bob(self, k: int, j: int) -> Link:
        return self.bobs[k][j]

    def scaled(self, factor: float) -> "ChannelRealization":
        """Every channel and radius multiplied by factor (noise normalization)."""
        return replace(
            self,
            H_b=self.H_b * factor,
            bobs=tuple(tuple(link.scaled(factor) for link in space) for space in self.bobs),
            eves=tuple(link.scaled(factor) for link in self.eves),
        )

    def resample_truth(self, seed: Seed) -> "ChannelRealization":
        """Same estimates with fresh in-ball true channels."""
        rng = np.random.default_rng(seed)
        return replace(
            self,
            bobs=tuple(tuple(link.with_truth(rng) for link in space) for space in self.bobs),
            eves=tuple(link.with_truth(rng) for link in self.eves),
        )


def _drop(center: Sequence[float], radius: float, rng: np.random.Generator) -> Tuple[float, float, float]:
    r = radius * np.sqrt(rng.uniform())
    phi = rng.uniform(0, 2 * np.pi)
    return (center[0] + r * np.cos(phi), center[1] + r * np.sin(phi), float(center[2]))


def _user_link(space: int, position, H_b: np.ndarray, params: SystemParams, geometry: Geometry,
               kappa_h: float, kappa_g: float, rng: np.random.Generator) -> Link:
    to_user, d_direct = _unit(geometry.bs, position)
    los_h = ula_steering(params.N, to_user[0])
    h_hat = _rician(los_h, params.rician_direct,
                    path_loss(d_direct, params.exponent_direct, params.reference_path_loss), rng)

    ris_to_user, d_ris = _unit(geometry.ris, position)
    los_g = upa_steering(params.M, ris_to_user)
    g_hat = _rician(los_g, params.rician_ris_user,
                    path_loss(d_ris, params.exponent_ris_user, params.reference_path_loss), rng)

    G_hat = cascaded_channel(g_hat, H_b)
    xi = kappa_h * float(np.linalg.norm(h_hat))
    zeta = kappa_g * float(np.linalg.norm(G_hat))
    h = h_hat + sample_uncertainty_ball(xi, h_hat.shape, rng)
    G = G_hat + sample_uncertainty_ball(zeta, G_hat.shape, rng)
    return Link(space, tuple(position), h_hat, g_hat, G_hat, h, G, xi, zeta)


def generate_realization(params: SystemParams, geometry: Geometry, uncertainty: UncertaintyConfig,
                         seed: int) -> ChannelRealization:
    """
    Draw positions, Rician estimates and in-ball true channels for one drop.

    Args:
        params: system constants
        geometry: node positions and cluster radius
        uncertainty: normalized error bounds
        seed: random seed; equal inputs give bit-identical output

    Returns:
        ChannelRealization with Bobs sorted by estimated gain per space
    """
    rng = np.random.default_rng(seed)

    bs_to_ris, d_b = _unit(geometry.bs, geometry.ris)
    los_b = np.outer(upa_steering(params.M, -bs_to_ris), ula_steering(params.N, bs_to_ris[0]).conj())
    H_b = _rician(los_b, params.rician_bs_ris, path_loss(d_b, params.exponent_bs_ris, params.reference_path_loss), rng)

    bobs = []
    for k in range(2):
        links = [
            _user_link(k, _drop(geometry.bob_center(k), geometry.cluster_radius, rng), H_b, params, geometry,
                       uncertainty.kappa_h_bob, uncertainty.kappa_g_bob, rng)
            for _ in range(params.users(k))
        ]
        links.sort(key=lambda link: link.gain, reverse=True)
        bobs.append(tuple(links))

    eves = tuple(
        _user_link(k, _drop(geometry.eve_center(k), geometry.cluster_radius, rng), H_b, params, geometry,
                   uncertainty.kappa_h_eve, uncertainty.kappa_g_eve, rng)
        for k in range(NUM_EVES)
    )
    logger.debug(f"Realization seed {seed}: {params.J_r}+{params.J_t} Bobs, N={params.N}, M={params.M}")
    return ChannelRealization(H_b, (bobs[0], bobs[1]), eves, seed)


def dump_channels(realization: ChannelRealization, path: str) -> None:
    """
    Write every link's complex entries (row-major) to a text file.

    Args:
        realization: channels to write
        path: destination file
    """
    def _write(fh, label: str, arr: np.ndarray):
        flat = np.asarray(arr).ravel()
        fh.write(f"{label} {' '.join(str(s) for s in np.asarray(arr).shape)}\n")
        for z in flat:
            fh.write(f"  {z.real:.17g} {z.imag:.17g}\n")

    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"seed {realization.seed}\n")
            _write(fh, "H_b", realization.H_b)
            for k, space in enumerate(realization.bobs):
                for j, link in enumerate(space):
                    fh.write(f"bob {k} {j} xi {link.xi:.17g} zeta {link.zeta:.17g}\n")
                    for name in ("h_hat", "g_hat", "G_hat", "h", "G"):
                        _write(fh, name, getattr(link, name))
            for e, link in enumerate(realization.eves):
                fh.write(f"eve {e} xi {link.xi:.17g} zeta {link.zeta:.17g}\n")
                for name in ("h_hat", "g_hat", "G_hat", "h", "G"):
                    _write(fh, name, getattr(link, name))
    except OSError as e:
        logger.error(f"Failed to write channel dump {path}: {str(e)}")
        raise

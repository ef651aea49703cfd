"""Excited-band eigenmodes and edge-state electromagnetic absorption.

The drive transfers atoms from the paired "a" band into a probe band "c"
with its own hopping J_c and chemical potential mu_c.  Within the edge
window min(eps_k) < omega < max(eps_k) the absorption weight of each
ground state is

    W_k(+-) = (2 pi Omega^2 / hbar) |sum_j f0(j) (psi_k(j) +- psi_k(N+1-j))|^2

evaluated over the probe eigenmodes psi_k.  hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PERIODIC = "periodic"
HARD_WALL = "hard_wall"
HARMONIC = "harmonic"


@dataclass(frozen=True, eq=False)
class CBandSpec:
    """Probe-band lattice: hopping, filling offset and confinement type."""

    n_sites: int
    hopping: float
    mu: float
    confinement: str = PERIODIC
    kappa: float = 0.0
    center: Optional[float] = None

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least 2 sites")
        if self.confinement not in (PERIODIC, HARD_WALL, HARMONIC):
            raise ValueError(f"unknown confinement {self.confinement!r}")
        if self.confinement == HARMONIC and self.kappa < 0:
            raise ValueError("harmonic confinement needs kappa >= 0")


@dataclass(eq=False)
class CModes:
    """Orthonormal probe eigenmodes: energies[k] and waves[j, k]."""

    energies: np.ndarray
    waves: np.ndarray  # complex for rings, real otherwise
    spec: CBandSpec


def cband_matrix(cspec: CBandSpec) -> np.ndarray:
    """Single-particle probe matrix; rings close the (N, 1) bond."""
    n = cspec.n_sites
    h = np.zeros((n, n))
    for j in range(n - 1):
        h[j, j + 1] = h[j + 1, j] = -cspec.hopping
    if cspec.confinement == PERIODIC and n > 2:
        h[0, n - 1] = h[n - 1, 0] = -cspec.hopping
    np.fill_diagonal(h, -cspec.mu)
    if cspec.confinement == HARMONIC:
        j = np.arange(1, n + 1, dtype=float)
        j0 = 0.5 * (n + 1) if cspec.center is None else cspec.center
        h[np.diag_indices(n)] += 0.5 * cspec.kappa * (j - j0) ** 2
    return h


def c_eigenmodes(cspec: CBandSpec) -> CModes:
    """Probe eigenmodes for the requested confinement.

    Periodic rings use plane waves exp(i k r_j)/sqrt(N) with k = 2 pi n/(N a);
    hard walls use sqrt(2/(N+1)) sin(k r_j) with k = n pi/((N+1) a); the
    harmonic trap is diagonalised densely.  Energies are sorted ascending.
    """
    n = cspec.n_sites
    if cspec.confinement == PERIODIC:
        ka = 2.0 * np.pi * np.arange(n) / n
        j = np.arange(1, n + 1)
        waves = np.exp(1j * np.outer(j, ka)) / np.sqrt(n)
        energies = -2.0 * cspec.hopping * np.cos(ka) - cspec.mu
    elif cspec.confinement == HARD_WALL:
        ka = np.pi * np.arange(1, n + 1) / (n + 1)
        j = np.arange(1, n + 1)
        waves = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(j, ka))
        energies = -2.0 * cspec.hopping * np.cos(ka) - cspec.mu
    else:
        energies, waves = np.linalg.eigh(cband_matrix(cspec))
    order = np.argsort(energies, kind="stable")
    return CModes(energies=np.asarray(energies, dtype=float)[order],
                  waves=np.asarray(waves)[:, order], spec=cspec)


@dataclass(eq=False)
class SpectrumResult:
    """Delta-peak absorption weights of the two ground states."""

    omegas: np.ndarray
    weight_plus: np.ndarray
    weight_minus: np.ndarray
    rabi: float

    def weights(self, state: str) -> np.ndarray:
        if state in ("plus", "+"):
            return self.weight_plus
        if state in ("minus", "-"):
            return self.weight_minus
        raise ValueError(f"state must be 'plus' or 'minus', got {state!r}")

    def superpose(self, alpha: complex, beta: complex) -> np.ndarray:
        """Weights of alpha |g+> + beta |g->: the incoherent mixture rule."""
        return abs(alpha) ** 2 * self.weight_plus + abs(beta) ** 2 * self.weight_minus


def absorption_spectrum(f0: np.ndarray, cmodes: CModes, rabi: float) -> SpectrumResult:
    """Edge-state absorption peaks for both ground states.

    The two ends of the wire absorb with interfering amplitudes; the
    relative sign between psi_k(j) and its reflection psi_k(N+1-j)
    distinguishes the ground states.
    """
    f0 = np.asarray(f0, dtype=float)
    n = cmodes.waves.shape[0]
    if len(f0) != n:
        raise ValueError(f"f0 has {len(f0)} sites but the probe band has {n}")
    psi = cmodes.waves
    psi_r = psi[::-1, :]
    amp_p = f0 @ (psi + psi_r)
    amp_m = f0 @ (psi - psi_r)
    pref = 2.0 * np.pi * rabi ** 2
    return SpectrumResult(
        omegas=cmodes.energies.copy(),
        weight_plus=pref * np.abs(amp_p) ** 2,
        weight_minus=pref * np.abs(amp_m) ** 2,
        rabi=rabi,
    )


@dataclass(eq=False)
class BroadenedSpectrum:
    omegas: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray


def broaden(result: SpectrumResult, eta: float,
            omegas: Optional[np.ndarray] = None, n_points: int = 2001,
            pad: float = 10.0) -> BroadenedSpectrum:
    """Lorentzian-broadened absorption curves on a uniform grid.

    Each delta peak is replaced by a Lorentzian of half-width ``eta``
    normalised discretely on the grid, so the Riemann sum of each curve
    reproduces the total peak weight regardless of the window.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if omegas is None:
        lo = result.omegas.min() - pad * eta
        hi = result.omegas.max() + pad * eta
        omegas = np.linspace(lo, hi, n_points)
    else:
        omegas = np.asarray(omegas, dtype=float)
    kernels = eta / np.pi / ((omegas[:, None] - result.omegas[None, :]) ** 2 + eta ** 2)
    dw = omegas[1] - omegas[0]
    norm = kernels.sum(axis=0) * dw
    kernels = kernels / np.where(norm > 0, norm, 1.0)
    return BroadenedSpectrum(
        omegas=omegas,
        gamma_plus=kernels @ result.weight_plus,
        gamma_minus=kernels @ result.weight_minus,
    )


def ring_closed_form(omega, hopping_c: float, mu_c: float, rabi: float, state: str):
    """Large-N absorption of a trivial-point ring, per unit frequency.

    Gamma(+-, omega) = (-2 Omega^2 / J_c) (-2 J_c +- (omega + mu_c))
                       / sqrt((2 J_c)^2 - (omega + mu_c)^2)
    inside the band |omega + mu_c| < 2 J_c.
    """
    w = np.asarray(omega, dtype=float) + mu_c
    sign = +1.0 if state in ("plus", "+") else -1.0
    band = (2 * hopping_c) ** 2 - w ** 2
    out = np.where(band > 0,
                   (-2 * rabi ** 2 / hopping_c) * (-2 * hopping_c + sign * w)
                   / np.sqrt(np.where(band > 0, band, 1.0)),
                   np.inf)
    return out


def ring_closed_form_integral(omega, hopping_c: float, mu_c: float, rabi: float, state: str):
    """Antiderivative of the trivial-point ring curve, for exact binning.

    With omega + mu_c = -2 J_c cos(theta) the integral of Gamma over
    omega equals 4 Omega^2 (theta +- sin(theta)).
    """
    w = np.asarray(omega, dtype=float) + mu_c
    theta = np.arccos(np.clip(-w / (2 * hopping_c), -1.0, 1.0))
    sign = +1.0 if state in ("plus", "+") else -1.0
    return 4.0 * rabi ** 2 * (theta + sign * np.sin(theta))


def convert_frequency(omega_model, transition_offset, mu, mu_c):
    """Electromagnetic frequency from the model drive frequency.

    omega_physical = omega_model + transition_offset - mu + mu_c, where the
    offset is the bare internal-state splitting.
    """
    return omega_model + transition_offset - mu + mu_c


def invert_frequency(omega_physical, transition_offset, mu, mu_c):
    """Model drive frequency that realises a given electromagnetic frequency."""
    return omega_physical - transition_offset + mu - mu_c

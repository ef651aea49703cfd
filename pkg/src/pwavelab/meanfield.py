"""Self-consistent pairing and the effective interactions that produce it.

The uniform gap solves

    -1/V = (1/N_k) sum_k sin^2(ka) / sqrt((2J cos ka - mu)^2 + (2 D sin ka)^2)

with attractive V < 0; site-resolved profiles come from iterating
D_j = -V <a_{j+1} a_j> against the chain diagonalisation.  Three
microscopic mechanisms for the nearest-neighbour interaction are provided
as closed-form parameter maps with SI output.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import constants as sc
from scipy.integrate import quad

from .bdg import BdGSolution, ChainSpec, InvalidSpecError, diagonalize

DEBYE = 1e-21 / sc.c  # C m
BOHR_MAGNETON = sc.physical_constants["Bohr magneton"][0]


class PairingError(ValueError):
    """Raised when the interaction cannot produce a pairing solution."""


class ConvergenceError(RuntimeError):
    """Self-consistency loop failed; carries the residual history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


def gap_equation_rhs(delta: float, hopping: float, mu: float, n_k: int) -> float:
    """Brillouin-zone average on an even grid of n_k momenta."""
    ka = 2.0 * np.pi * np.arange(n_k) / n_k
    ek = np.sqrt((2 * hopping * np.cos(ka) - mu) ** 2 + (2 * delta * np.sin(ka)) ** 2)
    good = ek > 0
    return float(np.mean(np.where(good, np.sin(ka) ** 2 / np.where(good, ek, 1.0), 0.0)))


def solve_uniform_gap(interaction: float, hopping: float, mu: float,
                      n_k: int = 400, tol: float = 1e-12) -> float:
    """Uniform gap from the momentum-space self-consistency condition.

    Bisects the monotone-decreasing right-hand side of the gap equation;
    returns 0.0 when no positive solution exists (interaction too weak).
    """
    if interaction >= 0:
        raise PairingError("pairing needs an attractive interaction (V < 0)")
    if n_k < 2 or n_k % 2:
        raise ValueError("n_k must be even and at least 2")
    target = -1.0 / interaction
    if gap_equation_rhs(0.0, hopping, mu, n_k) <= target:
        return 0.0
    lo, hi = 0.0, max(abs(hopping), abs(mu), 1.0)
    while gap_equation_rhs(hi, hopping, mu, n_k) > target:
        hi *= 2.0
        if hi > 1e12 * max(abs(hopping), 1.0):
            raise PairingError("gap equation did not bracket a solution")
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if gap_equation_rhs(mid, hopping, mu, n_k) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pair_correlator(sol: BdGSolution) -> np.ndarray:
    """Ground-state anomalous correlator <a_{j+1} a_j> on each bond.

    Evaluated in the quasiparticle vacuum; real in the real-pairing gauge.
    """
    u, v = sol.u, sol.v
    return np.einsum("jn,jn->j", u[1:, :], v[:-1, :])


def solve_selfconsistent_delta(spec: ChainSpec, interaction: float,
                               delta_init=None, mixing: float = 0.5,
                               tol: float = 1e-10, max_iter: int = 500) -> tuple:
    """Iterate D_j <- -V <a_{j+1} a_j> to a fixed point.

    ``spec.delta`` is ignored apart from its length; the loop is seeded by
    ``delta_init`` (default 0.1 J on every bond, avoiding the trivial
    D = 0 fixed point) and linearly mixed.  Returns ``(spec_out, history)``
    where ``spec_out`` carries the converged profile and ``history`` the
    per-iteration residuals max_j |change in D_j|.
    """
    if interaction >= 0:
        raise PairingError("pairing needs an attractive interaction (V < 0)")
    n = spec.n_sites
    if delta_init is None:
        delta = np.full(n - 1, 0.1 * abs(spec.hopping))
    else:
        delta = np.broadcast_to(np.asarray(delta_init, dtype=float), (n - 1,)).copy()
    history = []
    for _ in range(max_iter):
        trial = ChainSpec(n, spec.hopping, spec.mu, delta,
                          boundary=spec.boundary, trap=spec.trap)
        new = -interaction * pair_correlator(diagonalize(trial))
        residual = float(np.max(np.abs(new - delta)))
        history.append(residual)
        delta = (1.0 - mixing) * delta + mixing * new
        if residual < tol:
            out = ChainSpec(n, spec.hopping, spec.mu, delta,
                            boundary=spec.boundary, trap=spec.trap)
            return out, history
    raise ConvergenceError(
        f"no fixed point after {max_iter} iterations (last residual {history[-1]:.3e})",
        history)


@dataclass(frozen=True)
class EffectiveCoupling:
    """An energy in SI units together with its frequency equivalent."""

    energy: float  # J

    @property
    def frequency(self) -> float:  # Hz
        return self.energy / sc.h


def effective_dipolar(d1_debye: float, d2_debye: float, spacing: float,
                      angle: float = np.pi / 2) -> EffectiveCoupling:
    """Nearest-neighbour interaction of two parallel dipoles.

    ``angle`` is measured between the common dipole axis and the bond
    direction; perpendicular alignment (the default) gives repulsion
    d1 d2 / (4 pi eps0 a^3), alignment along the bond flips the sign and
    doubles the magnitude.  ``spacing`` is the lattice constant in metres.
    """
    if spacing <= 0:
        raise ValueError("lattice constant must be positive")
    d1 = d1_debye * DEBYE
    d2 = d2_debye * DEBYE
    geom = 1.0 - 3.0 * np.cos(angle) ** 2
    return EffectiveCoupling(d1 * d2 * geom / (4 * np.pi * sc.epsilon_0 * spacing ** 3))


def effective_soc(interaction: float, hopping: float, raman_coupling: float,
                  recoil_phase: float) -> tuple:
    """(V_eff, J_eff) for Raman-dressed atoms in the lower helicity band.

    V_eff = V (2 J sin(k_L a) / Omega_R)^2 and J_eff = J cos(k_L a),
    leading order in 2J / Omega_R.  Units follow the inputs.
    """
    if raman_coupling == 0:
        raise ZeroDivisionError("Raman coupling must be nonzero")
    if abs(raman_coupling) < 5 * abs(2 * hopping):
        warnings.warn("effective_soc is a leading-order result; "
                      "Omega_R >> 2J is not well satisfied", stacklevel=2)
    v_eff = interaction * (2 * hopping * np.sin(recoil_phase) / raman_coupling) ** 2
    j_eff = hopping * np.cos(recoil_phase)
    return v_eff, j_eff


def _gaussian_wannier(sigma):
    return lambda x: (np.pi * sigma ** 2) ** (-0.25) * np.exp(-x ** 2 / (2 * sigma ** 2))


def effective_spin_lattice(zeeman: float, onsite_strength: float, spacing: float,
                           sigma: float, wannier=None) -> tuple:
    """(J_eff, V_eff) for a spin-dependent superlattice in a transverse field.

    J_eff is the Zeeman energy times the overlap of Wannier orbitals shifted
    by half a lattice constant, V_eff the contact interaction times the
    overlap of their densities.  With the default Gaussian orbital of width
    ``sigma`` both integrals close:

        J_eff = zeeman * exp(-a^2 / (16 sigma^2))
        V_eff = onsite_strength * exp(-a^2 / (8 sigma^2)) / (sigma sqrt(2 pi)).

    Passing an explicit ``wannier(x)`` callable switches to quadrature.
    """
    if sigma <= 0:
        raise ValueError("Wannier width must be positive")
    s = spacing / 2.0
    if wannier is None:
        j_eff = zeeman * np.exp(-spacing ** 2 / (16 * sigma ** 2))
        v_eff = onsite_strength * np.exp(-spacing ** 2 / (8 * sigma ** 2)) / (sigma * np.sqrt(2 * np.pi))
        return j_eff, v_eff
    lim = 12 * sigma + abs(s)
    overlap, _ = quad(lambda x: wannier(x) * wannier(x - s), -lim, lim, limit=200)
    dens, _ = quad(lambda x: wannier(x) ** 2 * wannier(x - s) ** 2, -lim, lim, limit=200)
    return zeeman * overlap, onsite_strength * dens


def spin_lattice_quadrature(zeeman: float, onsite_strength: float, spacing: float,
                            sigma: float) -> tuple:
    """Quadrature evaluation of the spin-lattice integrals with the Gaussian orbital."""
    return effective_spin_lattice(zeeman, onsite_strength, spacing, sigma,
                                  wannier=_gaussian_wannier(sigma))

"""Mean-field chain Hamiltonians and their Bogoliubov quasiparticles.

The single-wire mean field is a tight-binding chain of spinless fermions
with nearest-neighbour p-wave pairing,

    H = sum_j [ -J (a_j^+ a_{j+1} + h.c.) - (D_j a_j^+ a_{j+1}^+ + h.c.) ]
        - sum_j mu_j a_j^+ a_j ,

with real bond pairing D_j and a site-resolved chemical potential
mu_j = mu - trap_j.  Diagonalisation happens in the doubled (Nambu) basis
(a_1 .. a_N, a_1^+ .. a_N^+); quasiparticle modes carry real coherence
factors (u, v), and in the topological phase |mu| < 2J the lowest mode is
a zero-energy fermion built from two Majorana operators localised at the
chain ends.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

HARD_WALL = "hard_wall"
RING_WITH_BARRIER = "ring_with_barrier"

#: default threshold (units of J) below which the lowest mode counts as a zero mode
ZERO_TOL = 1e-6

#: site count cap for dense multi-wire diagonalisation
MULTIWIRE_SITE_CAP = 4096


class InvalidSpecError(ValueError):
    """Raised when chain parameters violate the model contract."""


class NoEdgeModeError(ValueError):
    """Raised when an edge mode is requested outside the topological phase."""


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Geometry and couplings of one p-wave wire.

    Parameters
    ----------
    n_sites : int
        Number of lattice sites, at least 2.
    hopping : float
        Hopping amplitude J.  Sets the energy unit.
    mu : float
        Uniform chemical potential.
    delta : array_like, shape (n_sites - 1,)
        Real pairing amplitude on each bond (j, j+1).
    boundary : str
        ``"hard_wall"`` for an open chain, ``"ring_with_barrier"`` for a
        ring whose wire is interrupted on one bond.  Both give the same
        wire matrix; the distinction selects the geometry of the probe
        band that accompanies the wire.
    trap : array_like, shape (n_sites,), optional
        On-site potential subtracted from ``mu`` site by site.
    """

    n_sites: int
    hopping: float
    mu: float
    delta: np.ndarray
    boundary: str = HARD_WALL
    trap: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise InvalidSpecError(f"need at least 2 sites, got {self.n_sites}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        delta = np.asarray(self.delta, dtype=float)
        if delta.shape != (self.n_sites - 1,):
            raise InvalidSpecError(
                f"delta must have length n_sites - 1 = {self.n_sites - 1}, "
                f"got shape {delta.shape}"
            )
        if not np.all(np.isfinite(delta)):
            raise InvalidSpecError("delta must be finite and real")
        object.__setattr__(self, "delta", delta)
        if self.boundary not in (HARD_WALL, RING_WITH_BARRIER):
            raise InvalidSpecError(f"unknown boundary {self.boundary!r}")
        if self.trap is not None:
            trap = np.asarray(self.trap, dtype=float)
            if trap.shape != (self.n_sites,):
                raise InvalidSpecError("trap profile must have one entry per site")
            object.__setattr__(self, "trap", trap)

    @classmethod
    def uniform(cls, n_sites, hopping, mu, delta, boundary=HARD_WALL, trap=None):
        """Chain with the same pairing amplitude on every bond."""
        return cls(n_sites, hopping, mu, np.full(n_sites - 1, float(delta)),
                   boundary=boundary, trap=trap)

    @property
    def mu_profile(self) -> np.ndarray:
        mu = np.full(self.n_sites, float(self.mu))
        if self.trap is not None:
            mu = mu - self.trap
        return mu

    @property
    def is_reflection_symmetric(self) -> bool:
        """True when delta_j = delta_{N-j} and the trap is mirror symmetric."""
        sym = np.allclose(self.delta, self.delta[::-1], atol=1e-12)
        if self.trap is not None:
            sym = sym and np.allclose(self.trap, self.trap[::-1], atol=1e-12)
        return sym


def harmonic_trap(n_sites: int, kappa: float, center: Optional[float] = None) -> np.ndarray:
    """On-site profile kappa (j - j0)^2 / 2 with j = 1..N and default centre (N+1)/2."""
    if kappa < 0:
        raise InvalidSpecError("trap curvature must be non-negative")
    j = np.arange(1, n_sites + 1, dtype=float)
    j0 = 0.5 * (n_sites + 1) if center is None else float(center)
    return 0.5 * kappa * (j - j0) ** 2


@dataclass(eq=False)
class BdGSolution:
    """Positive-energy half of a BdG spectrum.

    ``u[j, nu]`` and ``v[j, nu]`` are the real coherence factors of mode
    ``nu`` at site ``j``; the quasiparticle creation operator is
    gamma_nu^+ = sum_j u[j, nu] a_j^+ + v[j, nu] a_j.  Mode 0 is the one
    with the smallest |E|; when that energy falls below the zero
    tolerance the chain carries an edge mode with coherence vector
    ``f0 = u[:, 0] + v[:, 0]``.
    """

    energies: np.ndarray
    u: np.ndarray
    v: np.ndarray
    zero_mode_present: bool
    f0: np.ndarray
    spec: ChainSpec
    reflection_labels: list = field(default_factory=list)

    @property
    def n_sites(self) -> int:
        return self.u.shape[0]


def chain_matrices(spec: ChainSpec):
    """Single-particle blocks (h, D) of the wire Hamiltonian.

    h is the symmetric hopping/chemical-potential matrix, D the
    antisymmetric pairing matrix with D[j, j+1] = -delta_j.  Both the open
    chain and the ring with a barrier omit the (N, 1) bond for the wire.
    """
    n = spec.n_sites
    h = np.zeros((n, n))
    for j in range(n - 1):
        h[j, j + 1] = h[j + 1, j] = -spec.hopping
    np.fill_diagonal(h, -spec.mu_profile)
    D = np.zeros((n, n))
    for j in range(n - 1):
        D[j, j + 1] = -spec.delta[j]
        D[j + 1, j] = +spec.delta[j]
    return h, D


def build_bdg_matrix(spec: ChainSpec) -> np.ndarray:
    """Real symmetric 2N x 2N matrix in the (a, a^+) basis.

    Eigenvalues come in +-E pairs; the eigenvector (u, v) at +E carries
    the coherence factors of gamma^+ = sum u a^+ + v a.
    """
    h, D = chain_matrices(spec)
    return np.block([[h, D], [-D, -h]])


def _reflection_operator(n: int) -> np.ndarray:
    """Action of the combined reflection/gauge symmetry on (u, v) pairs."""
    R = np.eye(n)[::-1]
    Z = np.zeros((n, n))
    return np.block([[R, Z], [Z, -R]])


def _symmetrize_degenerate(E, W, Wop, tol=1e-10):
    """Rotate degenerate eigenvector groups so each diagonalises Wop."""
    start = 0
    m = len(E)
    for i in range(1, m + 1):
        if i == m or abs(E[i] - E[start]) > tol:
            if i - start > 1:
                blk = W[:, start:i]
                wsub = blk.T @ Wop @ blk
                _, vw = np.linalg.eigh(0.5 * (wsub + wsub.T))
                W[:, start:i] = blk @ vw
            start = i
    return W


def diagonalize(spec: ChainSpec, zero_tol: float = ZERO_TOL) -> BdGSolution:
    """Quasiparticle modes of the wire, E >= 0 half-spectrum.

    The zero mode, when present, is returned as mode 0 in the symmetry
    gauge where u is reflection symmetric and v antisymmetric, with the
    overall sign fixed so the largest entry of f0 is positive.
    ``zero_tol`` is measured in units of the hopping amplitude.
    """
    n = spec.n_sites
    M = build_bdg_matrix(spec)
    E, W = np.linalg.eigh(M)
    symmetric = spec.is_reflection_symmetric
    Wop = _reflection_operator(n) if symmetric else None
    if symmetric:
        W = _symmetrize_degenerate(E, W, Wop)

    tol_abs = abs(zero_tol * spec.hopping)
    R = np.eye(n)[::-1]
    picked = []
    for i in range(2 * n):
        if E[i] > 1e-12:
            picked.append(i)
        elif abs(E[i]) <= 1e-12:
            # exact numerical degeneracy at zero: keep the member whose u is
            # reflection symmetric (the lambda = -i convention)
            u, v = W[:n, i], W[n:, i]
            if not symmetric or (u @ (R @ u) - v @ (R @ v)) > 0.0:
                picked.append(i)
    if len(picked) > n:
        # an odd zero pair slipped through both branches; drop extras
        picked = picked[: n]
    E_half = np.abs(E[picked])
    U = W[:n, picked].copy()
    V = W[n:, picked].copy()

    order = np.argsort(E_half, kind="stable")
    E_half, U, V = E_half[order], U[:, order], V[:, order]

    # for a split-but-tiny pair the eigh pair is (+e, -e); make sure mode 0
    # is the lambda = -i member when the spec is symmetric
    if symmetric and E_half[0] <= tol_abs:
        u, v = U[:, 0], V[:, 0]
        if (u @ (R @ u) - v @ (R @ v)) < 0.0:
            # swap in the particle-hole partner (v, u), which lives at -E
            U[:, 0], V[:, 0] = v.copy(), u.copy()

    zero_present = E_half[0] < tol_abs
    f0 = U[:, 0] + V[:, 0]
    if zero_present:
        k = np.argmax(np.abs(f0))
        if f0[k] < 0:
            U[:, 0] = -U[:, 0]
            V[:, 0] = -V[:, 0]
            f0 = -f0
    else:
        f0 = np.zeros(0)

    sol = BdGSolution(
        energies=E_half,
        u=U,
        v=V,
        zero_mode_present=bool(zero_present),
        f0=f0,
        spec=spec,
    )
    if symmetric:
        sol.reflection_labels = classify_reflection_symmetry(sol, spec)
    else:
        sol.reflection_labels = [None] * n
    return sol


def classify_reflection_symmetry(sol: BdGSolution, spec: ChainSpec) -> list:
    """Per-mode symmetry label under simultaneous reflection and gauge twist.

    Modes with label -1j have u symmetric / v antisymmetric under
    j -> N+1-j; label +1j is the opposite.  Requires a reflection
    symmetric pairing profile.
    """
    if not spec.is_reflection_symmetric:
        raise InvalidSpecError("reflection classification needs delta_j = delta_{N-j}")
    n = sol.n_sites
    R = np.eye(n)[::-1]
    labels = []
    for nu in range(sol.u.shape[1]):
        u, v = sol.u[:, nu], sol.v[:, nu]
        w = u @ (R @ u) - v @ (R @ v)  # +1 for lambda=-i, -1 for lambda=+i
        if w > 1.0 - 1e-8:
            labels.append(-1j)
        elif w < -1.0 + 1e-8:
            labels.append(+1j)
        else:
            warnings.warn(
                f"mode {nu} has indefinite reflection character (w={w:.3e}); "
                "left unclassified", stacklevel=2)
            labels.append(None)
    return labels


def edge_mode_closed_form(hopping: float, delta: float, mu: float, n_sites: int) -> np.ndarray:
    """Closed-form edge coherence vector f0 for uniform pairing.

    The zero-energy condition gives the recursion
    (J - D) f0(j-1) + (J + D) f0(j+1) + mu f0(j) = 0, solved by
    f0(j) = alpha (x_+^j - x_-^j) with

        x_pm = -mu / (2 (J + D)) +- sqrt( (mu / (2 (J + D)))^2 + (D - J)/(D + J) ).

    Degenerate cases: f0 = delta_{j1} when x_+ = x_- = 0 (D = J, mu = 0)
    and f0 = delta_{jN} when 1/x_+ = 1/x_- = 0 (D = -J, mu = 0).  For
    D < 0 the generic solution is the mirror image of the D > 0 one.
    Normalised so sum f0^2 = 1 with the largest entry positive.
    """
    J, D = float(hopping), float(delta)
    if abs(mu) >= 2 * abs(J):
        raise NoEdgeModeError(f"no edge mode for |mu| >= 2J (mu={mu}, J={J})")
    n = int(n_sites)
    j = np.arange(1, n + 1)

    mirror = D < 0
    if mirror:
        D = -D
    if abs(J + D) < 1e-12 * max(abs(J), 1.0):
        raise NoEdgeModeError("J + |delta| = 0 leaves no normalisable mode")

    b = -mu / (2.0 * (J + D))
    disc = complex(b * b + (D - J) / (D + J))
    root = np.sqrt(disc)
    xp, xm = b + root, b - root

    if abs(xp) < 1e-12 and abs(xm) < 1e-12:
        f = np.zeros(n)
        f[0] = 1.0
    elif abs(xp - xm) < 1e-12:
        # confluent double root: independent solutions x^j and j x^j; the left
        # boundary condition removes the pure power term
        f = (j * xp ** j).real
    else:
        c = xp ** j - xm ** j
        if np.max(np.abs(c.imag)) > 1e-9 * np.max(np.abs(c)):
            f = c.imag  # conjugate roots: the combination is purely imaginary
        else:
            f = c.real
    if mirror:
        f = f[::-1]
    f = f / np.linalg.norm(f)
    k = np.argmax(np.abs(f))
    if f[k] < 0:
        f = -f
    return f


@dataclass
class LdosResult:
    """Delta-peak data and a broadened local density of states."""

    peak_energies: np.ndarray      # +-E_nu, length 2 * n_modes
    peak_weights: np.ndarray       # (2 * n_modes, N): u^2 rows then v^2 rows
    energies: Optional[np.ndarray] = None
    curve: Optional[np.ndarray] = None  # (len(energies), N), units 2*pi


def local_density_of_states(sol: BdGSolution, eta: float,
                            energies: Optional[Sequence[float]] = None) -> LdosResult:
    """A(j, E) = 2 pi sum_nu [u^2 L_eta(E - E_nu) + v^2 L_eta(E + E_nu)].

    Returns the raw delta peaks (exact weights u_nu(j)^2 at +E_nu and
    v_nu(j)^2 at -E_nu) and, if an energy grid is supplied, the
    Lorentzian-broadened curve with unit-area kernels.
    """
    if eta <= 0:
        raise ValueError("broadening eta must be positive")
    E = sol.energies
    peaks_E = np.concatenate([E, -E])
    peaks_W = np.concatenate([(sol.u ** 2).T, (sol.v ** 2).T], axis=0)
    res = LdosResult(peak_energies=peaks_E, peak_weights=peaks_W)
    if energies is not None:
        grid = np.asarray(energies, dtype=float)
        lor = eta / np.pi / ((grid[:, None] - peaks_E[None, :]) ** 2 + eta ** 2)
        res.energies = grid
        res.curve = 2.0 * np.pi * lor @ peaks_W
    return res


def multiwire_min_energy(spec: ChainSpec, n_wires: int, interwire_hopping: float,
                         site_cap: int = MULTIWIRE_SITE_CAP) -> float:
    """Smallest positive eigenvalue of an open array of identical wires.

    The wires share the single-wire mean field and are coupled by a
    site-diagonal hopping J' between neighbouring wires.
    """
    if n_wires < 2:
        raise InvalidSpecError("need at least two wires")
    n = spec.n_sites
    if n * n_wires > site_cap:
        raise InvalidSpecError(
            f"{n * n_wires} sites exceed the dense-diagonalisation cap {site_cap}")
    h, D = chain_matrices(spec)
    eye_w = np.eye(n_wires)
    T = np.zeros((n_wires, n_wires))
    for i in range(n_wires - 1):
        T[i, i + 1] = T[i + 1, i] = 1.0
    h_full = np.kron(eye_w, h) + np.kron(T, -interwire_hopping * np.eye(n))
    D_full = np.kron(eye_w, D)
    M = np.block([[h_full, D_full], [-D_full, -h_full]])
    E = np.linalg.eigvalsh(M)
    return float(E[E > 0].min())

"""Time evolution and low-lying spectra on truncated bases.

Pulses are integrated with piecewise-constant midpoint sampling: the
controls are held at their value at the center of each dt step and each
step is applied with a Lanczos (Krylov) matrix exponential at a fixed
per-step tolerance.  Diagonal generators are advanced with exact phases.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .basis import Basis, SymmetrizedBasis, ghz_component_values
from .errors import PropagationError, SpectralError, ValidationError
from .hamiltonian import build_hamiltonian

DEFAULT_DT_US = 0.001
KRYLOV_TOL = 1e-12
KRYLOV_MAX_DIM = 64
_DENSE_SPECTRUM_CUTOFF = 600


@dataclass
class StateVector:
    """Amplitudes over a Basis or a SymmetrizedBasis."""

    space: object
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValidationError(
                f"amplitude vector of shape {amps.shape} does not match dim {self.space.dim}"
            )
        self.amplitudes = amps

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ValidationError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def overlap(self, other):
        """<self|other>."""
        if other.space.dim != self.space.dim:
            raise ValidationError("states live in different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def populations(self):
        return np.abs(self.amplitudes) ** 2

    def copy(self):
        return StateVector(self.space, self.amplitudes.copy())

    def in_full_basis(self):
        """Expand a sector state back to its parent basis (no-op otherwise)."""
        if isinstance(self.space, SymmetrizedBasis):
            return StateVector(self.space.basis, self.space.from_sector(self.amplitudes))
        return self


def ground_state(basis):
    """All sites in |0>: the configuration with integer value 0."""
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index_of(0)] = 1.0
    return StateVector(basis, amps)


def basis_state(basis, pattern):
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index_of(pattern)] = 1.0
    return StateVector(basis, amps)


def ghz_state(basis, phi=0.0):
    """(|A> + e^{i phi} |Abar>)/sqrt(2) over the two staggered orderings."""
    i_a, i_abar = basis.ghz_indices()
    amps = np.zeros(basis.dim, dtype=complex)
    amps[i_a] = 1.0 / np.sqrt(2.0)
    amps[i_abar] = np.exp(1j * phi) / np.sqrt(2.0)
    return StateVector(basis, amps)


def krylov_expm_apply(matvec, vec, dt, tol=KRYLOV_TOL, max_dim=KRYLOV_MAX_DIM,
                      start_check=3):
    """exp(-1j*dt*H) @ vec for Hermitian H given through `matvec`.

    Lanczos with full reorthogonalization; the a-posteriori error estimate
    dt * beta_m * |u_m| must drop below `tol` (relative to |vec|) or
    PropagationError is raised.  Returns (result, krylov_dim).
    """
    nrm = np.linalg.norm(vec)
    if nrm == 0.0 or dt == 0.0:
        return vec.astype(complex, copy=True), 0
    dim = vec.size
    max_dim = min(max_dim, dim)
    v = np.empty((max_dim + 1, dim), dtype=complex)
    v[0] = vec / nrm
    alphas = []
    betas = []
    for j in range(max_dim):
        w = matvec(v[j])
        a = float(np.real(np.vdot(v[j], w)))
        w = w - a * v[j]
        if j > 0:
            w = w - betas[-1] * v[j - 1]
        # One full reorthogonalization pass keeps the small factorization clean.
        w = w - v[: j + 1].T @ (np.conj(v[: j + 1]) @ w)
        alphas.append(a)
        b = float(np.linalg.norm(w))
        m = j + 1
        if m >= start_check or b < 1e-14 or m == max_dim:
            t_small = np.diag(np.asarray(alphas))
            if m > 1:
                off = np.asarray(betas[: m - 1])
                t_small = t_small + np.diag(off, 1) + np.diag(off, -1)
            evals, q = np.linalg.eigh(t_small)
            u = q @ (np.exp(-1j * dt * evals) * q[0, :].conj())
            err = dt * b * abs(u[-1])
            if err <= tol or b < 1e-14:
                result = (v[:m].T @ u) * nrm
                return result, m
        betas.append(b)
        v[j + 1] = w / b
    raise PropagationError(
        f"Krylov step did not reach tolerance {tol} within dimension {max_dim}"
    )


class SampledEvolution:
    """Prepared midpoint-sampled propagator for one space.

    Holds the drive template and the control-independent diagonal so that
    repeated pulse evaluations (optimization loops) skip the setup cost.
    Works on a full Basis or, when every diagonal term is reflection
    symmetric, on a SymmetrizedBasis.
    """

    def __init__(self, space, terms, shifts=None, coupling=None):
        self.space = space
        self.terms = terms
        if coupling is None:
            coupling = terms.coupling
        if isinstance(space, SymmetrizedBasis):
            if space.basis is not terms.basis:
                raise ValidationError("sector does not belong to the terms' basis")
            self.coupling = space.reduce_operator(coupling)
            self.static_diag = space.reduce_diagonal(terms.static_diagonal(shifts))
            self.excitations = space.reduce_diagonal(terms.excitations)
        else:
            if space is not terms.basis:
                raise ValidationError("state space does not match the terms' basis")
            self.coupling = coupling
            self.static_diag = terms.static_diagonal(shifts)
            self.excitations = terms.excitations

    def matvec_at(self, omega_rad, delta_rad):
        coupling = self.coupling
        diag = self.static_diag - delta_rad * self.excitations

        def matvec(x):
            return omega_rad * (coupling @ x) + diag * x

        return matvec

    def run(self, amplitudes, pulse, dt=DEFAULT_DT_US, krylov_tol=KRYLOV_TOL,
            max_krylov=KRYLOV_MAX_DIM, observer=None, observer_stride=1):
        tau = pulse.tau
        if tau == 0.0:
            return amplitudes.astype(complex, copy=True)
        if dt <= 0 or not np.isfinite(dt):
            raise ValidationError(f"dt must be positive, got {dt}")
        n_steps = int(round(tau / dt))
        if n_steps < 1:
            raise ValidationError(
                f"dt={dt} does not divide the pulse duration {tau} within rounding"
            )
        # Steps are the requested dt rounded to a whole count of the duration.
        h = tau / n_steps
        amps = amplitudes.astype(complex, copy=True)
        start_check = 3
        for step in range(n_steps):
            omega_rad, delta_rad = pulse.sample((step + 0.5) * h)
            matvec = self.matvec_at(float(omega_rad), float(delta_rad))
            try:
                amps, m = krylov_expm_apply(
                    matvec, amps, h, tol=krylov_tol, max_dim=max_krylov,
                    start_check=start_check,
                )
            except PropagationError as exc:
                raise PropagationError(str(exc), step_index=step) from None
            start_check = max(3, m - 1)
            if observer is not None and (step + 1) % observer_stride == 0:
                observer((step + 1) * h, amps)
        return amps


def evolve(psi, pulse, terms, shifts=None, dt=DEFAULT_DT_US, krylov_tol=KRYLOV_TOL,
           max_krylov=KRYLOV_MAX_DIM, observer=None, observer_stride=1, coupling=None):
    """Propagate `psi` through `pulse`; returns a new StateVector."""
    engine = SampledEvolution(psi.space, terms, shifts, coupling=coupling)
    amps = engine.run(
        psi.amplitudes, pulse, dt=dt, krylov_tol=krylov_tol, max_krylov=max_krylov,
        observer=observer, observer_stride=observer_stride,
    )
    return StateVector(psi.space, amps)


def evolve_under_diagonal(psi, generator_diag, duration):
    """Exact phases exp(-i g T) for a diagonal generator in rad/us."""
    g = np.asarray(generator_diag, dtype=float)
    if isinstance(psi.space, SymmetrizedBasis) and g.shape == (psi.space.basis.dim,):
        g = psi.space.reduce_diagonal(g)
    if g.shape != (psi.space.dim,):
        raise ValidationError("generator diagonal does not match the state space")
    return StateVector(psi.space, psi.amplitudes * np.exp(-1j * g * duration))


@dataclass
class SpectrumSlice:
    """Lowest part of the spectrum at one control sample.

    energies are relative to the ground energy; vectors holds the
    eigenvectors as columns.  Near-degenerate ground spaces are reported
    through ground_degeneracy, and overlap diagnostics should be summed
    over that subspace rather than read off a single vector.
    """

    param: float
    ground_energy: float
    energies: np.ndarray
    vectors: np.ndarray
    overlaps: np.ndarray | None = None
    ground_degeneracy: int = 1

    def ground_population(self):
        if self.overlaps is None:
            return None
        return float(np.sum(self.overlaps[: self.ground_degeneracy]))


def lowest_spectrum(terms, shifts, omega_rad, delta_rad, m, psi=None, space=None,
                    param=0.0, degeneracy_tol=1e-8):
    """Lowest m eigenpairs of H(omega, delta); deterministic start vector.

    Small problems are solved densely; larger ones through a Lanczos
    eigensolver on the sparse matrix.
    """
    if m < 1:
        raise ValidationError(f"need at least one eigenpair, got m={m}")
    h = build_hamiltonian(terms, shifts, omega_rad, delta_rad)
    if space is not None and isinstance(space, SymmetrizedBasis):
        h = space.reduce_operator(sparse.csr_matrix(h))
        diag_dim = space.dim
    else:
        diag_dim = terms.basis.dim
    m = min(m, diag_dim)
    if diag_dim <= _DENSE_SPECTRUM_CUTOFF or m > diag_dim // 2:
        evals, vecs = np.linalg.eigh(h.toarray())
        evals, vecs = evals[:m], vecs[:, :m]
    else:
        v0 = np.full(diag_dim, 1.0 / np.sqrt(diag_dim))
        try:
            evals, vecs = eigsh(h, k=m, which="SA", v0=v0, tol=1e-10)
        except ArpackNoConvergence as exc:
            raise SpectralError(f"eigensolver did not converge: {exc}") from exc
        order = np.argsort(evals)
        evals, vecs = evals[order], vecs[:, order]
    e0 = float(evals[0])
    rel = evals - e0
    degeneracy = int(np.sum(rel <= degeneracy_tol))
    overlaps = None
    if psi is not None:
        if psi.space.dim != diag_dim:
            raise ValidationError("state space does not match the spectrum space")
        overlaps = np.abs(vecs.conj().T @ psi.amplitudes) ** 2
    return SpectrumSlice(
        param=param, ground_energy=e0, energies=rel, vectors=vecs,
        overlaps=overlaps, ground_degeneracy=degeneracy,
    )

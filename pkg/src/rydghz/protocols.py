"""Measurement protocols run on simulated states.

Covers the antiferromagnetic-ordering decomposition of a state (component
populations, off-diagonal coherence, fidelity), staggered-phase parity
oscillations with a fixed-frequency fit and the coherence lower bound
|beta| >= C/2, the resonant many-body readout rotation and its calibration,
density-density correlations, the dimer (spin-1) picture of the readout,
and the protocol that converts a chain GHZ state into a Bell pair between
the two edge atoms.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .basis import Basis, ChainGeometry, SymmetrizedBasis, enumerate_basis
from .controls import constant_pulse
from .detection import sample_shots
from .errors import FitError, ValidationError
from .hamiltonian import (
    build_hamiltonian,
    drive_coupling,
    staggered_field_generator,
)
from .propagate import (
    DEFAULT_DT_US,
    StateVector,
    evolve,
    evolve_under_diagonal,
)
from .units import TWO_PI, mhz_to_angular

_DENSE_UNITARY_CUTOFF = 1200


# ---------------------------------------------------------------------------
# state decomposition


@dataclass(frozen=True)
class GhzDecomposition:
    """Populations and coherence of the two antiferromagnetic orderings.

    coherence is <A|rho|Abar> (for a pure state, a_A * conj(a_Abar)); when
    it comes from an oscillation fit only its modulus is bounded and
    `exact` is False.
    """

    population_a: float
    population_abar: float
    coherence: complex
    exact: bool = True

    @property
    def fidelity(self):
        return (self.population_a + self.population_abar) / 2.0 + self.coherence.real

    @property
    def best_fidelity(self):
        """Fidelity maximized over the target-state relative phase."""
        return (self.population_a + self.population_abar) / 2.0 + abs(self.coherence)

    @property
    def best_phase(self):
        """Relative phase phi of the target (|A> + e^{i phi}|Abar>)/sqrt(2)."""
        return float(-np.angle(self.coherence)) if self.coherence != 0 else 0.0

    def to_text(self, provenance=None):
        lines = [
            "# rydghz-ghz-decomposition",
            f"population_a: {self.population_a!r}",
            f"population_abar: {self.population_abar!r}",
            f"coherence_real: {self.coherence.real!r}",
            f"coherence_imag: {self.coherence.imag!r}",
            f"coherence_abs: {abs(self.coherence)!r}",
            f"fidelity: {self.fidelity!r}",
            f"exact: {self.exact}",
        ]
        for key in sorted(provenance or {}):
            lines.append(f"{key}: {provenance[key]}")
        return "\n".join(lines) + "\n"


def _as_full_state(state):
    if isinstance(state.space, SymmetrizedBasis):
        return state.in_full_basis()
    return state


def exact_ghz_decomposition(state, basis=None):
    """Decompose a state vector or density matrix over the two orderings."""
    if isinstance(state, StateVector):
        psi = _as_full_state(state)
        basis = psi.space
        i_a, i_abar = basis.ghz_indices()
        a = psi.amplitudes[i_a]
        abar = psi.amplitudes[i_abar]
        return GhzDecomposition(
            population_a=float(abs(a) ** 2),
            population_abar=float(abs(abar) ** 2),
            coherence=complex(a * np.conj(abar)),
        )
    rho = np.asarray(state)
    if basis is None or rho.ndim != 2 or rho.shape != (basis.dim, basis.dim):
        raise ValidationError("density-matrix input needs a matching basis")
    i_a, i_abar = basis.ghz_indices()
    return GhzDecomposition(
        population_a=float(rho[i_a, i_a].real),
        population_abar=float(rho[i_abar, i_abar].real),
        coherence=complex(rho[i_a, i_abar]),
    )


def bounded_ghz_decomposition(population_a, population_abar, bound, phase=0.0):
    """Decomposition with |coherence| known only as a lower bound."""
    return GhzDecomposition(
        population_a=float(population_a),
        population_abar=float(population_abar),
        coherence=complex(bound * np.exp(1j * phase)),
        exact=False,
    )


def parity_expectation(psi):
    """<P> with P = prod_i sigma_z, eigenvalue (-1)^(N-k) per configuration."""
    psi = _as_full_state(psi)
    return float(psi.space.parity @ psi.populations())


# ---------------------------------------------------------------------------
# resonant readout rotation


def apply_ux(psi, terms, duration_us, omega_mhz=5.0, dt=DEFAULT_DT_US):
    """Resonant constant drive under the full interacting Hamiltonian."""
    if duration_us == 0.0:
        return psi.copy()
    pulse = constant_pulse(duration_us, omega_mhz)
    return evolve(psi, pulse, terms, shifts=None, dt=dt)


@dataclass(frozen=True)
class UxCalibration:
    """Scanned readout rotation: duration maximizing the parity contrast.

    quality and phase_offset are modulus and argument of
    <Abar|U^dag P U|A> at the chosen duration; the fitted oscillation
    amplitude for coherence beta is 2*quality*|beta|, so quality <= 1
    guarantees the C/2 lower bound.
    """

    duration_us: float
    omega_mhz: float
    contrast: float
    quality: float
    phase_offset: float
    times_us: np.ndarray = field(repr=False)
    contrast_curve: np.ndarray = field(repr=False)


def optimal_ux_duration(terms, omega_mhz=5.0, t_max_us=0.15, dt=0.001):
    """Scan the readout duration on a uniform grid (1 ns by default).

    The contrast (E_plus - E_minus)/2 between opposite-phase GHZ inputs
    equals Re <U Abar|P|U A>, so a single pair of evolutions of |A> and
    |Abar> yields the whole curve.
    """
    basis = terms.basis
    if basis.n_sites % 2:
        raise ValidationError("readout calibration needs an even chain")
    i_a, i_abar = basis.ghz_indices()
    parity = basis.parity.astype(float)
    pulse = constant_pulse(t_max_us, omega_mhz)

    histories = []
    for start in (i_a, i_abar):
        psi0 = np.zeros(basis.dim, dtype=complex)
        psi0[start] = 1.0
        snapshots = []
        evolve(
            StateVector(basis, psi0), pulse, terms, dt=dt,
            observer=lambda t, amps: snapshots.append(amps.copy()),
        )
        histories.append(np.asarray(snapshots))
    ua, uabar = histories
    q_curve = np.einsum("ti,i,ti->t", np.conj(uabar), parity, ua)
    times = dt * np.arange(1, len(q_curve) + 1)
    contrast_curve = q_curve.real
    best = int(np.argmax(contrast_curve))
    return UxCalibration(
        duration_us=float(times[best]),
        omega_mhz=omega_mhz,
        contrast=float(contrast_curve[best]),
        quality=float(abs(q_curve[best])),
        phase_offset=float(np.angle(q_curve[best])),
        times_us=times,
        contrast_curve=contrast_curve,
    )


def _dense_unitary(terms, omega_mhz, duration_us):
    h = build_hamiltonian(terms, None, mhz_to_angular(omega_mhz), 0.0).toarray()
    return expm(-1j * h * duration_us)


def _readout_applier(terms, duration_us, omega_mhz, dt):
    """Function psi -> U psi for the constant resonant readout."""
    basis = terms.basis
    if basis.dim <= _DENSE_UNITARY_CUTOFF:
        u = _dense_unitary(terms, omega_mhz, duration_us)

        def apply(psi):
            return StateVector(basis, u @ psi.amplitudes)

        return apply

    def apply(psi):
        return apply_ux(psi, terms, duration_us, omega_mhz=omega_mhz, dt=dt)

    return apply


def ideal_rotation_readout(basis, angle=np.pi / 2, phase=0.0):
    """Noninteracting product rotation, for readout substitution tests.

    Embeds the state into the unconstrained configuration space and applies
    exp(-i angle/2 (cos(phase) sigma_x + sin(phase) sigma_y)) on every site.
    Only practical for small chains (2^N amplitudes).
    """
    n = basis.n_sites
    if n > 14:
        raise ValidationError("product-rotation readout is limited to short chains")
    full = enumerate_basis(ChainGeometry(n, max_adjacent_pairs=max(n - 1, 0)))
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    single = np.array(
        [[c, -1j * s * np.exp(1j * phase)], [-1j * s * np.exp(-1j * phase), c]]
    )
    rotation = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        rotation = np.kron(rotation, single)

    def apply(psi):
        vec = np.zeros(full.dim, dtype=complex)
        vec[psi.space.configs] = psi.amplitudes  # config value == full-basis index
        return StateVector(full, rotation @ vec)

    return apply


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class CosineFit:
    """values ~ offset + amplitude * cos(omega * x - phase), amplitude >= 0."""

    angular_frequency: float
    amplitude: float
    phase: float
    offset: float
    residual_rms: float


def _fit_cosine(x, values, omega, weights=None):
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if x.shape != values.shape or x.ndim != 1:
        raise ValidationError("fit needs matching 1-d abscissa and values")
    design = np.column_stack([np.ones_like(x), np.cos(omega * x), np.sin(omega * x)])
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != x.shape or np.any(weights < 0):
            raise ValidationError("fit weights must be nonnegative, one per point")
        scale = np.sqrt(weights)
        design = design * scale[:, None]
        values = values * scale
    if np.linalg.matrix_rank(design) < 3:
        raise FitError("singular normal equations: the sample times do not "
                       "resolve offset, cosine, and sine terms")
    coeffs, *_ = np.linalg.lstsq(design, values, rcond=None)
    offset, a, b = coeffs
    residual = design @ coeffs - values
    return CosineFit(
        angular_frequency=float(omega),
        amplitude=float(np.hypot(a, b)),
        phase=float(np.arctan2(b, a)),
        offset=float(offset),
        residual_rms=float(np.sqrt(np.mean(residual**2))),
    )


def fit_fixed_frequency(times_us, values, frequency_mhz, weights=None):
    """Three-parameter cosine fit at a known frequency (MHz, times in us)."""
    return _fit_cosine(times_us, values, mhz_to_angular(frequency_mhz), weights=weights)


def dominant_frequency(times_us, values, f_max_mhz=None, oversample=32):
    """Peak of the demeaned periodogram, refined parabolically (MHz).

    Diagnostic companion to the fixed-frequency fit; the grid step is the
    inverse time span divided by `oversample`.
    """
    t = np.asarray(times_us, dtype=float)
    y = np.asarray(values, dtype=float) - np.mean(values)
    span = t.max() - t.min()
    if span <= 0 or t.size < 4:
        raise FitError("need a spread of sample times to locate a frequency")
    df = 1.0 / (span * oversample)
    if f_max_mhz is None:
        dt_min = np.min(np.diff(np.sort(t)))
        f_max_mhz = 0.5 / dt_min
    freqs = np.arange(df, f_max_mhz + df, df)
    phases = TWO_PI * np.outer(freqs, t)
    power = np.abs(np.cos(phases) @ y - 1j * (np.sin(phases) @ y))
    k = int(np.argmax(power))
    # refine by minimizing the cosine-fit residual near the grid peak; the
    # residual vanishes at the true frequency of a clean tone, which makes
    # this unbiased by the finite observation window
    from scipy.optimize import minimize_scalar

    lo = freqs[max(k - 1, 0)]
    hi = freqs[min(k + 1, len(freqs) - 1)]
    if hi <= lo:
        return float(freqs[k])

    def residual(f):
        return _fit_cosine(t, y, mhz_to_angular(f)).residual_rms

    best = minimize_scalar(residual, bounds=(lo, hi), method="bounded",
                           options={"xatol": df * 1e-6})
    return float(best.x)


# ---------------------------------------------------------------------------
# parity oscillations


@dataclass
class ParityScan:
    """Parity versus staggered-phase accumulation time, with its fit."""

    times_us: np.ndarray
    parity: np.ndarray
    delta_p_mhz: float
    n_sites: int
    frequency_mhz: float
    amplitude: float
    phase: float
    offset: float
    residual_rms: float
    mode: str = "exact"
    parity_sigma: np.ndarray | None = None
    n_shots: int | None = None

    def to_table(self):
        lines = [
            "# rydghz-parity-scan",
            f"# n_sites: {self.n_sites}",
            f"# delta_p_mhz: {self.delta_p_mhz!r}",
            f"# fit_frequency_mhz: {self.frequency_mhz!r}",
            f"# amplitude: {self.amplitude!r}",
            f"# phase: {self.phase!r}",
            f"# offset: {self.offset!r}",
            f"# mode: {self.mode}",
            "# columns: time_us,parity" + (",sigma" if self.parity_sigma is not None else ""),
        ]
        for j, (t, e) in enumerate(zip(self.times_us, self.parity)):
            row = f"{float(t)!r},{float(e)!r}"
            if self.parity_sigma is not None:
                row += f",{float(self.parity_sigma[j])!r}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def default_scan_times(n_sites, delta_p_mhz, n_times=None):
    """Uniform grid over one period of the slowest harmonic, endpoint open.

    The parity signal only contains harmonics at integer multiples of
    delta_p up to N*delta_p; sampling one full period of delta_p uniformly
    makes those harmonics orthogonal on the grid, so the fixed-frequency
    fit reads off the N*delta_p Fourier coefficient without leakage.
    """
    if delta_p_mhz <= 0:
        raise ValidationError("staggered probe amplitude must be positive")
    n = int(n_times) if n_times else max(64, 4 * n_sites)
    if n < 2 * n_sites + 2:
        raise ValidationError("scan grid too coarse for the fastest harmonic")
    period = 1.0 / delta_p_mhz
    return period * np.arange(n) / n


def parity_oscillation_scan(state, terms, delta_p_mhz, readout=None, times_us=None,
                            n_times=None, mode="exact", detection=None,
                            n_shots=1000, seed=0, grouping=None, dt=DEFAULT_DT_US,
                            basis=None):
    """Accumulate staggered phase, rotate, and measure parity versus time.

    state may be a StateVector or (for bound audits) a density matrix with
    an explicit `basis`.  readout is a UxCalibration, a duration in us, a
    callable psi -> psi, or None to calibrate a scanned-optimal rotation.
    mode 'exact' records expectation values; 'shots-raw' draws bitstrings
    through a DetectionModel and averages their parities; 'shots-inferred'
    first inverts the grouped detection confusion (see detection module).
    """
    is_rho = not isinstance(state, StateVector)
    if is_rho:
        rho = np.asarray(state, dtype=complex)
        if basis is None:
            raise ValidationError("density-matrix scans need an explicit basis")
        if rho.shape != (basis.dim, basis.dim):
            raise ValidationError("density matrix does not match the basis")
        if basis.dim > _DENSE_UNITARY_CUTOFF:
            raise ValidationError("density-matrix scans are limited to small chains")
        if mode != "exact":
            raise ValidationError("sampled scans need a state vector")
    else:
        state = _as_full_state(state)
        basis = state.space
    n = basis.n_sites
    if n % 2:
        raise ValidationError("parity oscillations need an even chain")
    if times_us is None:
        times_us = default_scan_times(n, delta_p_mhz, n_times)
    else:
        times_us = np.asarray(times_us, dtype=float)
    generator = staggered_field_generator(basis, delta_p_mhz)

    apply_readout = None
    if callable(readout):
        apply_readout = readout
    else:
        if readout is None:
            readout = optimal_ux_duration(terms)
        if isinstance(readout, UxCalibration):
            duration, omega = readout.duration_us, readout.omega_mhz
        else:
            duration, omega = float(readout), 5.0
        apply_readout = _readout_applier(terms, duration, omega, dt)

    if is_rho:
        # P rotated once: E(T) = Tr(D_T rho D_T^dag U^dag P U)
        u = np.empty((basis.dim, basis.dim), dtype=complex)
        for j in range(basis.dim):
            col = np.zeros(basis.dim, dtype=complex)
            col[j] = 1.0
            rotated = apply_readout(StateVector(basis, col))
            if rotated.space is not basis:
                raise ValidationError(
                    "density-matrix scans need a basis-preserving readout"
                )
            u[:, j] = rotated.amplitudes
        p_rot = u.conj().T @ (basis.parity[:, None] * u)
        parity_values = np.empty(times_us.size)
        for j, t in enumerate(times_us):
            d = np.exp(-1j * generator * t)
            rho_t = (d[:, None] * rho) * np.conj(d)[None, :]
            parity_values[j] = float(np.sum(rho_t.T * p_rot).real)
        sigma = None
    else:
        parity_values = np.empty(times_us.size)
        sigma = np.empty(times_us.size) if mode == "shots-raw" else None
        if mode not in ("exact", "shots-raw", "shots-inferred"):
            raise ValidationError(f"unknown scan mode {mode!r}")
        if mode == "shots-inferred":
            from .detection import (
                DetectionModel,
                MagnetizationExcitationGrouping,
                infer_true_distribution,
                parity_from_distribution,
            )

            grouping = grouping or MagnetizationExcitationGrouping(n)
            detection = detection or DetectionModel()
            confusion = grouping.confusion(detection)
        elif mode == "shots-raw":
            from .detection import DetectionModel

            detection = detection or DetectionModel()
        for j, t in enumerate(times_us):
            rotated = apply_readout(evolve_under_diagonal(state, generator, t))
            if mode == "exact":
                parity_values[j] = parity_expectation(rotated)
                continue
            shots = sample_shots(rotated, n_shots, model=detection, seed=seed + j)
            if mode == "shots-raw":
                per_shot = shots.parities().astype(float)
                parity_values[j] = float(per_shot.mean())
                sigma[j] = float(per_shot.std(ddof=1) / np.sqrt(n_shots))
            else:
                observed = grouping.observed_distribution(shots)
                inferred = infer_true_distribution(observed, confusion).distribution
                parity_values[j] = parity_from_distribution(inferred, grouping)

    frequency_mhz = n * delta_p_mhz
    fit = fit_fixed_frequency(times_us, parity_values, frequency_mhz)
    return ParityScan(
        times_us=times_us,
        parity=parity_values,
        delta_p_mhz=delta_p_mhz,
        n_sites=n,
        frequency_mhz=frequency_mhz,
        amplitude=fit.amplitude,
        phase=fit.phase,
        offset=fit.offset,
        residual_rms=fit.residual_rms,
        mode=mode,
        parity_sigma=sigma,
        n_shots=None if mode == "exact" else n_shots,
    )


@dataclass(frozen=True)
class CoherenceBound:
    """Lower bound |beta| >= amplitude/2 from a parity oscillation fit."""

    bound: float
    phase: float
    amplitude: float
    frequency_mhz: float

    def __iter__(self):
        yield from (self.bound, self.phase)


def coherence_lower_bound(scan):
    """C/2 bound on the ordering coherence, clipped to the physical 1/2."""
    bound = min(max(scan.amplitude, 0.0) / 2.0, 0.5)
    return CoherenceBound(
        bound=float(bound),
        phase=float(scan.phase),
        amplitude=float(scan.amplitude),
        frequency_mhz=float(scan.frequency_mhz),
    )


# ---------------------------------------------------------------------------
# density-density correlations


@dataclass(frozen=True)
class CorrelationResult:
    """g2(i,j) = <n_i n_j> - <n_i><n_j> and its distance average."""

    matrix: np.ndarray
    distances: np.ndarray
    radial: np.ndarray


def g2_correlations(source):
    """Connected density correlations of a state vector or a shot set."""
    if isinstance(source, StateVector):
        psi = _as_full_state(source)
        bits = psi.space.bits_matrix().astype(float)
        probs = psi.populations()
        mean = probs @ bits
        second = (bits * probs[:, None]).T @ bits
    else:
        bits = source.bits.astype(float)
        if bits.shape[0] < 1:
            raise ValidationError("correlation needs at least one shot")
        mean = bits.mean(axis=0)
        second = bits.T @ bits / bits.shape[0]
    matrix = second - np.outer(mean, mean)
    n = matrix.shape[0]
    distances = np.arange(1, n)
    radial = np.array([np.mean(np.diagonal(matrix, d)) for d in distances])
    return CorrelationResult(matrix=matrix, distances=distances, radial=radial)


# ---------------------------------------------------------------------------
# dimer (spin-1) picture of the readout


@dataclass(frozen=True)
class DimerContrast:
    """Parity contrast of the dimer-chain rotation versus drive time."""

    times_us: np.ndarray
    contrast: np.ndarray
    optimal_time_us: float
    optimal_contrast: float
    omega_mhz: float
    v_mhz: float
    v2_mhz: float
    n_dimers: int


def _dimer_operators(n_dimers, omega_rad, v_rad, v2_rad):
    """Sparse Hamiltonian and parity diagonal for the spin-1 dimer chain.

    Per-dimer basis is ordered (+, 0, -) where + holds the left atom of
    the pair excited and - the right; parity is diag(-1, +1, -1).
    """
    from scipy import sparse

    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / np.sqrt(2.0)
    proj_plus = np.diag([1.0, 0.0, 0.0])
    proj_minus = np.diag([0.0, 0.0, 1.0])
    eye = np.eye(3)

    def chain_op(factors):
        op = np.ones((1, 1))
        for f in factors:
            op = sparse.kron(sparse.csr_matrix(op), sparse.csr_matrix(f), format="csr")
        return op

    dim = 3**n_dimers
    h = sparse.csr_matrix((dim, dim))
    for j in range(n_dimers):
        factors = [eye] * n_dimers
        factors[j] = sx
        h = h + (omega_rad / np.sqrt(2.0)) * chain_op(factors)
    for j in range(n_dimers - 1):
        for left, right, strength in (
            (proj_plus, proj_plus, v2_rad),
            (proj_minus, proj_minus, v2_rad),
            (proj_minus, proj_plus, v_rad),
        ):
            factors = [eye] * n_dimers
            factors[j] = left
            factors[j + 1] = right
            h = h + strength * chain_op(factors)
    parity_single = np.array([-1.0, 1.0, -1.0])
    parity = np.ones(1)
    for _ in range(n_dimers):
        parity = np.kron(parity, parity_single)
    return sparse.csr_matrix(h), parity


def dimer_model_contrast(n_dimers, omega_mhz=5.0, v_mhz=24.0, v2_mhz=24.0 / 64.0,
                         times_us=None, dt=0.001):
    """Readout contrast in the weakly interacting spin-1 dimer picture.

    Both orderings of the chain GHZ state become ferromagnetic spin-1
    states |++...> and |--...>; the resonant drive acts as
    (omega/sqrt(2)) * sum_j Sx.  With interactions off the contrast peaks
    exactly at omega * t = pi / sqrt(2); blockade (v) and next-nearest
    neighbor (v2) couplings between dimers reduce it.
    """
    if n_dimers < 1:
        raise ValidationError("need at least one dimer")
    if times_us is None:
        t_max = 0.15 * 5.0 / omega_mhz
        times_us = dt * np.arange(1, int(round(t_max / dt)) + 1)
    else:
        times_us = np.asarray(times_us, dtype=float)
    omega_rad = mhz_to_angular(omega_mhz)
    h, parity = _dimer_operators(
        n_dimers, omega_rad, mhz_to_angular(v_mhz), mhz_to_angular(v2_mhz)
    )
    dim = h.shape[0]
    plus = np.zeros(dim, dtype=complex)
    minus = np.zeros(dim, dtype=complex)
    plus[0] = 1.0  # |++...+>
    minus[-1] = 1.0  # |--...->
    ghz_pair = np.column_stack([plus + minus, plus - minus]) / np.sqrt(2.0)
    if dim <= _DENSE_UNITARY_CUTOFF:
        evals, vecs = np.linalg.eigh(h.toarray())
        modes = vecs.conj().T @ ghz_pair
        phases = np.exp(-1j * np.outer(times_us, evals))
        contrast = np.empty(times_us.size)
        for j in range(times_us.size):
            evolved = vecs @ (phases[j][:, None] * modes)
            e_plus = float(parity @ (np.abs(evolved[:, 0]) ** 2))
            e_minus = float(parity @ (np.abs(evolved[:, 1]) ** 2))
            contrast[j] = (e_plus - e_minus) / 2.0
    else:
        from .propagate import krylov_expm_apply

        def matvec(x):
            return h @ x

        contrast = np.empty(times_us.size)
        state = ghz_pair.copy()
        previous_t = 0.0
        for j, t in enumerate(times_us):
            step = t - previous_t
            if step > 0:
                state[:, 0], _ = krylov_expm_apply(matvec, state[:, 0], step)
                state[:, 1], _ = krylov_expm_apply(matvec, state[:, 1], step)
            previous_t = t
            e_plus = float(parity @ (np.abs(state[:, 0]) ** 2))
            e_minus = float(parity @ (np.abs(state[:, 1]) ** 2))
            contrast[j] = (e_plus - e_minus) / 2.0
    best = int(np.argmax(contrast))
    return DimerContrast(
        times_us=times_us,
        contrast=contrast,
        optimal_time_us=float(times_us[best]),
        optimal_contrast=float(contrast[best]),
        omega_mhz=omega_mhz,
        v_mhz=v_mhz,
        v2_mhz=v2_mhz,
        n_dimers=n_dimers,
    )


# ---------------------------------------------------------------------------
# Bell-pair distribution to the chain edges


def edge_pair_density_matrix(psi):
    """Reduced density matrix of sites (1, N), basis order 00, 01, 10, 11."""
    psi = _as_full_state(psi)
    basis = psi.space
    n = basis.n_sites
    if n < 3:
        raise ValidationError("edge reduction needs interior sites")
    configs = basis.configs
    edge = 2 * (configs >> (n - 1)) + (configs & 1)
    bulk = (configs >> 1) & ((1 << (n - 2)) - 1)
    table = np.zeros((1 << (n - 2), 4), dtype=complex)
    table[bulk, edge] = psi.amplitudes
    return table.T @ table.conj()


@dataclass
class BellDistributionResult:
    """Outcome of converting a chain GHZ state into an edge Bell pair.

    The exact fields (edge density matrix, purity, coherence) come from
    the simulated state after the reverse sweep; the protocol fields
    mirror what an experiment reports: pattern populations after the
    conversion pulse and the parity fringe amplitude under a second,
    variable-phase rotation, combined into (patterns + fringe)/2 as the
    Bell fidelity bound.
    """

    n_sites: int
    state_after_sweep: StateVector
    edge_density_matrix: np.ndarray
    edge_populations: np.ndarray
    purity: float
    exact_coherence: complex
    exact_bell_fidelity: float
    bulk_ground_min: float
    bulk_ground_mean: float
    state_converted: StateVector
    site_populations: np.ndarray
    population_all_ground: float
    population_edges_excited: float
    pattern_population: float
    phases: np.ndarray
    edge_parity: np.ndarray
    fringe_fit: CosineFit
    fidelity_bound: float


def _edge_rotation_applier(terms, readout_duration_us, readout_omega_mhz, dt):
    """phi -> (psi -> psi) for a drive restricted to the two edge sites."""
    basis = terms.basis
    n = basis.n_sites
    static_diag = terms.static_diagonal(None)
    omega_rad = mhz_to_angular(readout_omega_mhz)

    def applier(phi):
        coupling = drive_coupling(basis, sites=(1, n), phase=float(phi))
        if basis.dim <= _DENSE_UNITARY_CUTOFF:
            h = (omega_rad * coupling).toarray() + np.diag(static_diag)
            u = expm(-1j * h * readout_duration_us)
            return lambda psi: StateVector(basis, u @ psi.amplitudes)
        pulse = constant_pulse(readout_duration_us, readout_omega_mhz)
        return lambda psi: evolve(psi, pulse, terms, coupling=coupling, dt=dt)

    return applier


def bell_distribution_protocol(pulse_forward, pulse_reverse, terms,
                               preparation_shifts=None, edge_shift_mhz=6.0,
                               readout_omega_mhz=5.0, readout_duration_us=None,
                               phases=None, initial_state=None, dt=DEFAULT_DT_US):
    """Distribute entanglement to the chain edges and read out the pair.

    Sequence: prepare a GHZ-like state with `pulse_forward` (skipped when
    `initial_state` is given), switch the edge sites to an isolating local
    shift, drive the detuning back down with `pulse_reverse` so the bulk
    disentangles toward |00...0>, leaving the edge pair in a one-excitation
    superposition.  A pi/2 rotation restricted to the edge atoms at phase 0
    converts it to the 00/11 form whose patterns (all ground, both edges
    excited) are reported; a second pi/2 rotation at variable phase then
    produces the parity fringe whose amplitude bounds the pair coherence.
    """
    basis = terms.basis
    n = basis.n_sites
    if n < 4:
        raise ValidationError("edge distribution needs at least four sites")
    from .propagate import ground_state

    if initial_state is not None:
        psi = _as_full_state(initial_state)
        if pulse_forward is not None:
            raise ValidationError("give either a forward pulse or an initial state")
    else:
        if preparation_shifts is None:
            from .hamiltonian import LocalShifts

            preparation_shifts = LocalShifts.preparation_default(n)
        psi = evolve(ground_state(basis), pulse_forward, terms,
                     shifts=preparation_shifts, dt=dt)
    if pulse_reverse is not None:
        from .hamiltonian import LocalShifts

        isolation = LocalShifts.edge_isolation(n, edge_shift_mhz)
        psi = evolve(psi, pulse_reverse, terms, shifts=isolation, dt=dt)

    edge_rho = edge_pair_density_matrix(psi)
    edge_populations = np.diag(edge_rho).real
    purity = float(np.trace(edge_rho @ edge_rho).real)
    coherence = complex(edge_rho[1, 2])  # <01|rho|10>
    exact_bell_fidelity = float(
        (edge_rho[1, 1].real + edge_rho[2, 2].real) / 2.0 + abs(coherence)
    )
    bits = basis.bits_matrix().astype(float)
    bulk_ground = 1.0 - psi.populations() @ bits[:, 1:-1]

    if phases is None:
        phases = np.linspace(0.0, 2.0 * np.pi, 48, endpoint=False)
    else:
        phases = np.asarray(phases, dtype=float)
    if readout_duration_us is None:
        readout_duration_us = 0.25 / readout_omega_mhz  # omega * t = pi/2
    rotation_at = _edge_rotation_applier(terms, readout_duration_us,
                                         readout_omega_mhz, dt)
    converted = rotation_at(0.0)(psi)
    converted_probs = converted.populations()
    site_populations = converted_probs @ bits
    pop_ground = float(converted_probs[basis.index_of(0)])
    pop_edges = float(converted_probs[basis.index_of((1 << (n - 1)) | 1)])
    edge_parity_sign = np.where((bits[:, 0] + bits[:, -1]) % 2 == 0, 1.0, -1.0)
    edge_parity = np.empty(phases.size)
    for j, phi in enumerate(phases):
        probed = rotation_at(phi)(converted)
        edge_parity[j] = float(edge_parity_sign @ probed.populations())
    fringe_fit = _fit_cosine(phases, edge_parity, omega=2.0)
    pattern_population = pop_ground + pop_edges
    return BellDistributionResult(
        n_sites=n,
        state_after_sweep=psi,
        edge_density_matrix=edge_rho,
        edge_populations=edge_populations,
        purity=purity,
        exact_coherence=coherence,
        exact_bell_fidelity=exact_bell_fidelity,
        bulk_ground_min=float(bulk_ground.min()),
        bulk_ground_mean=float(bulk_ground.mean()),
        state_converted=converted,
        site_populations=site_populations,
        population_all_ground=pop_ground,
        population_edges_excited=pop_edges,
        pattern_population=pattern_population,
        phases=phases,
        edge_parity=edge_parity,
        fringe_fit=fringe_fit,
        fidelity_bound=(pattern_population + fringe_fit.amplitude) / 2.0,
    )

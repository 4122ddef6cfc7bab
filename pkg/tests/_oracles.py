"""Independent oracles used to freeze expected values in the tests.

Everything here is deliberately written against the problem statement
rather than the package internals: brute-force enumeration over raw
bitstrings, dense matrix exponentials, and closed-form expressions.
"""

import numpy as np
import scipy.linalg

TWO_PI = 2.0 * np.pi


def brute_force_patterns(n_sites, max_adjacent_pairs=0):
    """All length-N bitstrings with at most the given number of '11' pairs,
    in ascending integer order (leftmost character = site 1 = MSB)."""
    out = []
    for v in range(1 << n_sites):
        s = format(v, f"0{n_sites}b")
        pairs = sum(1 for i in range(n_sites - 1) if s[i] == "1" and s[i + 1] == "1")
        if pairs <= max_adjacent_pairs:
            out.append(s)
    return out


def brute_force_sector_dims(n_sites, max_adjacent_pairs=0):
    """(even, odd) reflection-sector dimensions by explicit symmetrization."""
    patterns = brute_force_patterns(n_sites, max_adjacent_pairs)
    seen = set()
    fixed = 0
    pairs = 0
    for s in patterns:
        if s in seen:
            continue
        rev = s[::-1]
        if rev == s:
            fixed += 1
            seen.add(s)
        else:
            pairs += 1
            seen.add(s)
            seen.add(rev)
    return fixed + pairs, pairs


def dense_hamiltonian(basis, shifts_mhz, omega_rad, delta_rad, v_mhz=24.0,
                      interaction_range=3):
    """Dense H built independently from the configuration bitstrings."""
    n = basis.n_sites
    dim = basis.dim
    h = np.zeros((dim, dim))
    patterns = [basis.pattern_string(i) for i in range(dim)]
    index = {p: i for i, p in enumerate(patterns)}
    shifts = np.zeros(n) if shifts_mhz is None else np.asarray(shifts_mhz, float)
    for i, s in enumerate(patterns):
        bits = [int(c) for c in s]
        diag = 0.0
        for a in range(n):
            diag -= (delta_rad + TWO_PI * shifts[a]) * bits[a]
            for b_ in range(a + 1, n):
                if b_ - a <= interaction_range:
                    diag += TWO_PI * v_mhz / (b_ - a) ** 6 * bits[a] * bits[b_]
        h[i, i] = diag
        for a in range(n):
            flipped = s[:a] + ("1" if s[a] == "0" else "0") + s[a + 1:]
            j = index.get(flipped)
            if j is not None:
                h[i, j] += omega_rad / 2.0
    return h


def dense_evolve(basis, pulse, shifts_mhz, psi0, dt, v_mhz=24.0,
                 interaction_range=3):
    """Midpoint-sampled evolution with dense per-step matrix exponentials."""
    tau = pulse.tau
    n_steps = max(1, int(round(tau / dt)))
    h_step = tau / n_steps
    amps = np.asarray(psi0, dtype=complex).copy()
    for step in range(n_steps):
        omega_rad, delta_rad = pulse.sample((step + 0.5) * h_step)
        h = dense_hamiltonian(
            basis, shifts_mhz, float(omega_rad), float(delta_rad),
            v_mhz=v_mhz, interaction_range=interaction_range,
        )
        amps = scipy.linalg.expm(-1j * h_step * h) @ amps
    return amps


def classical_diagonal_energies(basis, shifts_mhz, delta_rad, v_mhz=24.0,
                                interaction_range=3):
    """Diagonal energies at omega = 0, for classical minimization checks."""
    h = dense_hamiltonian(basis, shifts_mhz, 0.0, delta_rad, v_mhz=v_mhz,
                          interaction_range=interaction_range)
    return np.diag(h).copy()


def two_qubit_parity_after_rotations(state4, phi, pulses=1):
    """Parity <sz sz> after `pulses` pi/2 rotations at laser phase phi.

    The single-qubit rotation is exp(-i (pi/4) (cos phi sx + sin phi sy)),
    the textbook parity-fringe analysis pulse.
    """
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    u1 = scipy.linalg.expm(-1j * (np.pi / 4) * (np.cos(phi) * sx + np.sin(phi) * sy))
    u = np.kron(u1, u1)
    psi = np.asarray(state4, dtype=complex)
    for _ in range(pulses):
        psi = u @ psi
    parity = np.array([1.0, -1.0, -1.0, 1.0])
    return float(np.real(np.vdot(psi, parity * psi)))


def gaussian_coherence_modulus(t, sigma_mhz, n_sites):
    """Quenched Doppler dephasing of the staggered coherence: closed form."""
    return np.exp(-((TWO_PI * sigma_mhz * np.asarray(t)) ** 2) * n_sites / 2.0)


def single_dimer_contrast(omega_rad, times):
    """Parity contrast of one isolated dimer under the spin-1 transverse drive.

    H = (Omega/sqrt(2)) S_x on {|+>, |0>, |->};  contrast(t) is the parity
    difference between the two opposite-phase superpositions of |+>, |->.
    """
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / np.sqrt(2)
    h = (omega_rad / np.sqrt(2)) * sx
    parity = np.array([-1.0, 1.0, -1.0])
    plus = np.array([1, 0, 1], dtype=complex) / np.sqrt(2)
    minus = np.array([1, 0, -1], dtype=complex) / np.sqrt(2)
    out = []
    for t in np.atleast_1d(times):
        u = scipy.linalg.expm(-1j * h * t)
        pp = np.real(np.vdot(u @ plus, parity * (u @ plus)))
        pm = np.real(np.vdot(u @ minus, parity * (u @ minus)))
        out.append((pp - pm) / 2.0)
    return np.asarray(out)


def random_ghz_like_density_matrix(rng, dim, i_a, i_abar):
    """Random trace-one PSD matrix with a boosted GHZ block."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    w = rng.uniform(0.0, 0.9)
    phi = rng.uniform(0.0, TWO_PI)
    ghz = np.zeros(dim, dtype=complex)
    ghz[i_a] = 1.0 / np.sqrt(2.0)
    ghz[i_abar] = np.exp(1j * phi) / np.sqrt(2.0)
    rho = (1.0 - w) * rho + w * np.outer(ghz, ghz.conj())
    return rho

#!/usr/bin/env python3
"""Certify ordering coherence from parity oscillations.

The two ordered components differ in staggered magnetization by 2N, so a
staggered detuning delta_p makes their relative phase wind at N*delta_p.
Rotating with the strongest available resonant drive and measuring the
parity of the excitation pattern turns that winding into a fringe whose
fitted amplitude C lower-bounds the coherence: |beta| >= C/2.  No
assumption about the state enters the bound, which is what makes the
fringe usable as an entanglement witness.
"""

import numpy as np

from rydghz.basis import ChainGeometry, enumerate_basis
from rydghz.detection import DetectionModel
from rydghz.hamiltonian import build_terms
from rydghz.propagate import ghz_state
from rydghz.protocols import (
    bounded_ghz_decomposition,
    coherence_lower_bound,
    dominant_frequency,
    parity_oscillation_scan,
)

delta_p = 3.8

for n in (4, 8, 12):
    basis = enumerate_basis(ChainGeometry(n))
    terms = build_terms(basis)
    scan = parity_oscillation_scan(ghz_state(basis, 0.0), terms, delta_p)
    fitted = dominant_frequency(scan.times_us, scan.parity)
    bound = coherence_lower_bound(scan)
    print(f"N={n:>2}: fringe at {fitted:7.3f} MHz (expect {n * delta_p:.1f}), "
          f"contrast {scan.amplitude:.4f}, |coherence| >= {bound.bound:.4f}")

print()
print("the contrast ceiling sits below 1 even for the perfect state: the")
print("readout rotation runs under the blockade, so it cannot reach the")
print("ideal pi/2 fringe of independent spins.")
print()

# with finite shots and readout errors the fringe shrinks further; the
# grouped detection correction recovers most of it.
n = 8
basis = enumerate_basis(ChainGeometry(n))
terms = build_terms(basis)
state = ghz_state(basis, 0.0)
model = DetectionModel()
raw = parity_oscillation_scan(state, terms, delta_p, mode="shots-raw",
                              detection=model, n_shots=2000, seed=1)
corrected = parity_oscillation_scan(state, terms, delta_p, mode="shots-inferred",
                                    detection=model, n_shots=2000, seed=1)
exact = parity_oscillation_scan(state, terms, delta_p)
print(f"N={n}, 2000 shots/point, p10={model.p10}, p01={model.p01}:")
print(f"  exact contrast      {exact.amplitude:.4f}")
print(f"  raw shots           {raw.amplitude:.4f}")
print(f"  detection-corrected {corrected.amplitude:.4f}")

population = float(np.sum(state.populations()[list(basis.ghz_indices())]))
fidelity = bounded_ghz_decomposition(
    population / 2.0, population / 2.0,
    coherence_lower_bound(corrected).bound,
).fidelity
print(f"  fidelity bound from pattern population and corrected fringe: "
      f"{fidelity:.4f}")

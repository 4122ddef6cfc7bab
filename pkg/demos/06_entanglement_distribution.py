#!/usr/bin/env python3
"""Distribute a Bell pair to the chain edges, then count the gates saved.

Running the preparation ramp backwards with the drive restricted to the
two edge atoms disentangles the bulk and deposits the ordering coherence
onto the edge pair: a Bell state spanning the whole chain.  A fringe
over the analysis phase certifies its fidelity.

The second half prices the alternative: building the same N-partite
state from nearest-neighbor two-qubit gates needs N/2 layers, and the
measured state fidelity fixes how good each layer would have to be.
"""

from rydghz.basis import ChainGeometry, enumerate_basis
from rydghz.controls import standard_guess_pulse
from rydghz.hamiltonian import LocalShifts, build_terms
from rydghz.optimize import gate_circuit_time_estimate
from rydghz.protocols import bell_distribution_protocol


def main():
    n = 8
    basis = enumerate_basis(ChainGeometry(n))
    terms = build_terms(basis)

    forward = standard_guess_pulse(1.1)
    reverse = standard_guess_pulse(1.2, delta_start_mhz=20.0,
                                   delta_stop_mhz=-20.0)
    result = bell_distribution_protocol(
        forward, reverse, terms,
        preparation_shifts=LocalShifts.preparation_default(n),
        dt=0.002,
    )
    print(f"chain of {n} sites:")
    print(f"  bulk-ground, edge-excited pattern population "
          f"{result.pattern_population:.4f}")
    print(f"  fringe amplitude over the analysis phase     "
          f"{result.fringe_fit.amplitude:.4f}")
    print(f"  certified Bell fidelity  >= {result.fidelity_bound:.4f}")
    print(f"  exact edge-pair Bell fidelity {result.exact_bell_fidelity:.4f}, "
          f"purity {result.purity:.4f}")
    print()

    print("equivalent gate-circuit cost at N=20:")
    estimate = gate_circuit_time_estimate(20, omega_max_mhz=5.0,
                                          fidelity_target=0.542)
    print(f"  {estimate.layers} nearest-neighbor gate layers, "
          f"{estimate.total_time_us:.3f} us at the same drive strength")
    print(f"  matching a state fidelity of 0.542 needs "
          f"{estimate.per_layer_fidelity:.4f} per layer")
    print("  a single shaped ramp does it in one 1.1 us sweep.")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Walk through the constrained configuration space of a blockaded chain.

Adjacent excited atoms cost V = 24 MHz, far above every other scale in
the problem, so configurations with neighboring 1s decouple from the
dynamics.  Dropping them leaves a Fibonacci-counted basis; reflection
symmetry splits it further into even and odd sectors, and state
preparation from |00...0> lives entirely in the even one.
"""

from rydghz.basis import ChainGeometry, enumerate_basis, symmetry_sector

print(f"{'N':>4} {'full 2^N':>10} {'blockaded':>10} {'even':>7} {'odd':>7}")
for n in range(2, 21, 2):
    basis = enumerate_basis(ChainGeometry(n))
    even = symmetry_sector(basis, "even")
    odd = symmetry_sector(basis, "odd")
    print(f"{n:>4} {2**n:>10} {basis.dim:>10} {even.dim:>7} {odd.dim:>7}")

print()
basis = enumerate_basis(ChainGeometry(6))
print("all 6-site blockaded configurations (site 1 on the left):")
for i in range(basis.dim):
    pattern = basis.pattern_string(i)
    tags = []
    if i in basis.ghz_indices():
        tags.append("ordered component")
    print(f"  {pattern}" + (f"   <- {tags[0]}" if tags else ""))

print()
print("the two ordered components are reflections of each other and carry")
print("staggered magnetization +N and -N; their equal superposition is the")
print("target of every preparation ramp in this package.")

"""Logical gates on the two-qubit phonon encoding: CNOT, X and Z.

The control bit is the phonon direction (x or y), the target bit the mode
type (CM or breathing).  Run with ``python3 demos/gates.py``.
"""
from pathlib import Path

import numpy as np

from phonon_optics.cli import parse_config
from phonon_optics.elements import cnot_truth_table, pauli_x_gate, pauli_z_gate, relative_phase

np.set_printoptions(precision=4, suppress=True)

trap = parse_config(Path(__file__).resolve().parent.parent / "configs" / "paper_regime.cfg").trap

for sign in (1, -1):
    rep = cnot_truth_table(trap.replace(pol_sign=sign))
    print(f"CNOT from the PBS, pol_sign = {sign:+d}")
    print("  |U|:\n", rep.magnitudes)
    print("  phase / pi:\n", rep.phases / np.pi)
    print(f"  min |U| on the pattern {rep.permutation_fidelity:.12f}, leakage {rep.max_leakage:.1e}")

x = pauli_x_gate(trap)
print("\nX from HWP_CM at theta = pi/4; raw block\n", x.raw_matrix)
print(f"  global phase {x.global_phase:+.4f} rad")

for k in (1, 2):
    z = pauli_z_gate(trap, k=k)
    print(f"\nQWP_CM k = {k}: relative phase {relative_phase(z):+.4f} rad")

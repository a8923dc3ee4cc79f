"""Walk through the three elements on single-phonon states.

Run with ``python3 demos/elements_tour.py`` from the repository root.
"""
import math
from pathlib import Path

import numpy as np

from phonon_optics.analysis import extract_mode_transform, nominal_durations
from phonon_optics.cli import parse_config
from phonon_optics.elements import InternalPrep, element_propagator
from phonon_optics.fock import ModeId, ModeLayout
from phonon_optics.hamiltonians import ElementKind, lamb_dicke

np.set_printoptions(precision=4, suppress=True)

run = parse_config(Path(__file__).resolve().parent.parent / "configs" / "paper_regime.cfg")
trap = run.trap
layout = ModeLayout(3)

print("Lamb-Dicke parameters:", {k: round(v, 4) for k, v in lamb_dicke(trap)._asdict().items()})
for name, t in nominal_durations(trap).items():
    print(f"  {name:9s} {t:.3e} s")

# PBS: the y phonon hops between CM and breathing modes, x is untouched
U = element_propagator(ElementKind.PBS, trap, layout)
rep = extract_mode_transform(U, list(ModeId), InternalPrep.PLUS, layout)
print("\nPBS, U^dag a_i U = sum_j c_ij a_j  (rows/cols CM_X, CM_Y, BR_X, BR_Y)")
print(rep.coefficients)

# HWP: a rotation between the x and y CM modes by 2 theta
for theta in (math.pi / 8, math.pi / 4):
    U = element_propagator(ElementKind.HWP_CM, trap, layout, theta=theta)
    rep = extract_mode_transform(U, (ModeId.CM_X, ModeId.CM_Y), InternalPrep.PLUS_I, layout)
    print(f"\nHWP_CM theta = {theta:.4f}")
    print(rep.coefficients)

# QWP: a phase between x and y, each number operator conserved
for k in (1, 2):
    U = element_propagator(ElementKind.QWP_CM, trap, layout, k=k)
    rep = extract_mode_transform(U, (ModeId.CM_X, ModeId.CM_Y), InternalPrep.PLUS, layout)
    c = rep.coefficients
    print(f"\nQWP_CM k = {k}: phase of c_yy relative to c_xx = {np.angle(c[1, 1] / c[0, 0]):+.4f} rad")

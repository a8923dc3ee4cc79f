"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a verdict line; ``conftest.py`` prints them in the
terminal summary, so a run shows one pass/fail line per criterion.
"""

import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import PAPER_CFG
from phonon_optics.analysis import extract_mode_transform, regime_report, rwa_scan
from phonon_optics.elements import (
    InternalPrep,
    cnot_truth_table,
    decoupling_check,
    element_propagator,
    pauli_x_gate,
    pauli_z_gate,
    relative_phase,
)
from phonon_optics.fock import (
    ModeId,
    ModeLayout,
    annihilation,
    creation,
    decode_basis,
    encode_basis,
    number_op,
    safe_indices,
    unitarity_error,
)
from phonon_optics.hamiltonians import ElementKind

VERDICTS: dict[int, str] = {}
RWA_OMEGAS = (1e7, 1e6, 1e5, 1e4)
X_MODES = (ModeId.CM_X, ModeId.BR_X)


def record(number, title, ok, detail):
    VERDICTS[number] = f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    assert ok, VERDICTS[number]


@pytest.fixture(scope="module")
def rwa(paper):
    start = time.perf_counter()
    result = rwa_scan(paper, ElementKind.PBS, RWA_OMEGAS, layout=ModeLayout(3))
    return result, time.perf_counter() - start


def propagators_1_to_5(paper, layout):
    """Every effective propagator the criteria 1-5 checks build."""
    out = [element_propagator(ElementKind.PBS, paper.replace(pol_sign=s), layout) for s in (1, -1)]
    for kind, theta in itertools.product((ElementKind.HWP_CM, ElementKind.HWP_BR), (math.pi / 8, math.pi / 6, math.pi / 4)):
        out.append(element_propagator(kind, paper, layout, theta=theta))
    out += [element_propagator(ElementKind.QWP_CM, paper, layout, k=k) for k in (1, 2)]
    return out


def test_criterion_1_pbs_mode_transform(paper, layout4):
    U = element_propagator(ElementKind.PBS, paper, layout4)
    rep = extract_mode_transform(U, list(ModeId), InternalPrep.PLUS, layout4)
    c = rep.coefficient
    errs = [
        abs(abs(c(ModeId.CM_Y, ModeId.BR_Y)) - 1),
        abs(abs(c(ModeId.BR_Y, ModeId.CM_Y)) - 1),
        abs(c(ModeId.CM_Y, ModeId.CM_Y)),
        abs(c(ModeId.BR_Y, ModeId.BR_Y)),
    ]
    x_err = max(abs(c(i, j) - (i == j)) for i in X_MODES for j in ModeId)
    x_err = max(x_err, max(abs(c(i, j)) for i in (ModeId.CM_Y, ModeId.BR_Y) for j in X_MODES))
    worst = max(max(errs), x_err, rep.residual)
    record(1, "PBS mode transform", worst < 1e-8,
           f"y-swap error {max(errs):.1e}, x identity error {x_err:.1e}, fit residual {rep.residual:.1e} (tol 1e-8)")


def test_criterion_2_cnot_truth_table(paper, layout4):
    details, ok = [], True
    for sign in (1, -1):
        rep = cnot_truth_table(paper.replace(pol_sign=sign), layout4)
        f1, f2 = rep.matrix[2, 3], rep.matrix[3, 2]
        phase_ok = abs(np.angle(f1) - np.angle(f2)) < 1e-10 and abs(abs(np.angle(f1)) - math.pi / 2) < 1e-10
        good = rep.pattern_matches and rep.permutation_fidelity >= 1 - 1e-10 and rep.max_leakage < 1e-10 and phase_ok
        ok &= good
        details.append(
            f"pol_sign={sign:+d}: min |U| {rep.permutation_fidelity:.12f}, "
            f"flip phase {np.angle(f1):+.10f}, leakage {rep.max_leakage:.1e}"
        )
    record(2, "CNOT truth table", ok, "; ".join(details))


def test_criterion_3_hwp_rotation_law(paper, layout4):
    worst = 0.0
    for kind, modes in ((ElementKind.HWP_CM, (ModeId.CM_X, ModeId.CM_Y)), (ElementKind.HWP_BR, (ModeId.BR_X, ModeId.BR_Y))):
        for theta in (math.pi / 8, math.pi / 6, math.pi / 4):
            U = element_propagator(kind, paper, layout4, theta=theta)
            rep = extract_mode_transform(U, modes, InternalPrep.PLUS_I, layout4)
            c, s = math.cos(2 * theta), math.sin(2 * theta)
            expected = np.array([[c, -1j * s], [-1j * s, c]])
            worst = max(worst, float(np.abs(rep.coefficients - expected).max()), rep.residual)
    x = pauli_x_gate(paper, layout4, theta=math.pi / 4)
    x_ok = x.pattern_matches and x.permutation_fidelity >= 1 - 1e-10
    record(3, "HWP rotation law", worst < 1e-8 and x_ok,
           f"max coefficient error {worst:.1e} over CM and breathing at pi/8, pi/6, pi/4 (tol 1e-8); "
           f"2 theta = pi/2 gives X magnitudes: {x_ok}")


def test_criterion_4_qwp_phase_law(paper, layout4):
    s = pauli_z_gate(paper, layout4, k=1)
    z = pauli_z_gate(paper, layout4, k=2)
    err_s = abs(abs(relative_phase(s)) - math.pi / 2)
    err_z = abs(abs(relative_phase(z)) - math.pi)
    mags = max(float(np.abs(r.magnitudes - np.eye(2)).max()) for r in (s, z))
    drift = max(max(r.conservation.values()) for r in (s, z))
    # constant of motion in the operator sense: [U, n] = 0 on the whole space
    comm = 0.0
    for kind, k in itertools.product((ElementKind.QWP_CM, ElementKind.QWP_BR), (1, 2)):
        U = element_propagator(kind, paper, layout4, k=k).unitary
        for m in ModeId:
            n = number_op(layout4, m)
            comm = max(comm, float(np.abs(U @ n - n @ U).max()))
    ok = err_s < 1e-8 and err_z < 1e-8 and mags < 1e-10 and drift < 1e-10 and comm < 1e-10
    record(4, "QWP phase law", ok,
           f"k=1 relative phase {relative_phase(s):+.10f} (|.| vs pi/2 err {err_s:.1e}), "
           f"k=2 err vs pi {err_z:.1e}, magnitude err {mags:.1e}, number drift {drift:.1e}, |[U,n]| {comm:.1e}")


def test_criterion_5_decoupling(paper, layout4):
    cases = [
        (ElementKind.PBS, InternalPrep.PLUS),
        (ElementKind.QWP_CM, InternalPrep.PLUS),
        (ElementKind.QWP_BR, InternalPrep.PLUS),
        (ElementKind.HWP_CM, InternalPrep.PLUS_I),
    ]
    losses = {f"{k.value}/{p.value}": 1 - decoupling_check(k, paper, p, n_samples=21, layout=layout4).min_purity
              for k, p in cases}
    control = decoupling_check(ElementKind.PBS, paper, InternalPrep.GROUND, n_samples=21, layout=layout4).min_purity
    ok = max(losses.values()) < 1e-10 and control < 0.999
    record(5, "decoupling", ok,
           f"max purity loss {max(losses.values()):.1e} over {len(losses)} cases, 21 samples (tol 1e-10); "
           f"PBS/ground min purity {control:.4f} (< 0.999)")


def test_criterion_6_rwa_validation(rwa):
    result, seconds = rwa
    inf = [r.infidelity for r in result.rows]
    conv = max(r.convergence for r in result.rows)
    ok = result.monotone and all(r.convergence < 1e-8 for r in result.rows) and seconds <= 120
    record(6, "RWA validation", ok,
           "infidelity " + ", ".join(f"{r.omega:.0e}:{r.infidelity:.3e}" for r in result.rows)
           + f"; strictly decreasing {all(a > b for a, b in zip(inf, inf[1:]))}; "
           f"max step-doubling distance {conv:.1e} (tol 1e-8); {seconds:.0f} s at n_max=3 (budget 120 s)")


def test_criterion_7_numerical_hygiene(paper, layout4, layout3, rwa):
    unit = max(p.unitarity_error() for p in propagators_1_to_5(paper, layout4))
    unit = max(unit, max(r.unitarity for r in rwa[0].rows))
    idx = safe_indices(layout3, layout3.n_max - 1)
    comm = 0.0
    for i, j in itertools.product(ModeId, repeat=2):
        a, ad = annihilation(layout3, i), creation(layout3, j)
        block = (a @ ad - ad @ a).toarray()[np.ix_(idx, idx)]
        comm = max(comm, float(np.abs(block - (i == j) * np.eye(len(idx))).max()))
    seen = set()
    bijective = True
    for s in ("g", "e"):
        for counts in itertools.product(range(layout3.levels), repeat=4):
            index = encode_basis(layout3, s, counts)
            bijective &= decode_basis(layout3, index) == (s, counts)
            seen.add(index)
    bijective &= seen == set(range(layout3.dim))
    ok = unit < 1e-10 and comm < 1e-12 and bijective
    record(7, "numerical hygiene", ok,
           f"max |U^dag U - I| {unit:.1e} (tol 1e-10); safe-subspace commutator err {comm:.1e}; "
           f"encode/decode bijection at n_max=3: {bijective}")


def test_criterion_8_regime_report(paper_run):
    rep = regime_report(paper_run.trap, paper_run.regime)
    ratios = [c.ratio for c in rep.checks]
    ok = rep.all_pass and all(c.passed for c in rep.checks) and min(ratios) >= 1e2
    record(8, "regime report", ok, "; ".join(f"{c.name} ratio {c.ratio:.3g}" for c in rep.checks))


def _cli(*args, out=None):
    cmd = [sys.executable, "-m", "phonon_optics", *map(str, args)]
    if out is not None:
        cmd += ["--out", str(out)]
    return subprocess.run(cmd, capture_output=True, text=True).returncode


def test_criterion_9_cli_contract(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = {
        "truth-table a": _cli("truth-table", "--gate", "cnot", "--config", PAPER_CFG, out=a),
        "truth-table b": _cli("truth-table", "--gate", "cnot", "--config", PAPER_CFG, out=b),
    }
    identical = a.read_bytes() == b.read_bytes()
    bad = tmp_path / "bad.cfg"
    bad.write_text(PAPER_CFG.read_text().replace("mu_x = 7.5e5", "mu_x = -1"))
    codes["deliberate failure"] = _cli("verify-element", "--kind", "pbs", "--prep", "ground", "--config", PAPER_CFG)
    codes["bad config"] = _cli("regime", "--config", bad)
    codes["single omega"] = _cli("rwa-scan", "--omegas", "1e5", "--config", PAPER_CFG)
    codes["verify pbs"] = _cli("verify-element", "--kind", "pbs", "--config", PAPER_CFG)
    expected = {"truth-table a": 0, "truth-table b": 0, "deliberate failure": 1,
                "bad config": 2, "single omega": 2, "verify pbs": 0}
    ok = identical and codes == expected
    record(9, "CLI contract", ok,
           f"byte-identical CSV {identical}; exit codes " + ", ".join(f"{k}={v}" for k, v in codes.items()))

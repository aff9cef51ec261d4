"""One test per acceptance criterion, each at its pinned tolerance and time limit."""

import subprocess
import sys

import pytest

from twistorlab import acceptance


def _report(check):
    timing = f"{check.elapsed:.3g}s"
    if check.time_limit is not None:
        timing += f" (limit {check.time_limit:g}s)"
    print(f"{check.line()}  {timing}  {check.details}")
    assert check.passed, check.details
    assert check.within_time, f"took {check.elapsed:.3g}s, limit {check.time_limit}s"


def test_criterion_01_standard_j():
    _report(acceptance.check_standard_j())


def test_criterion_02_hodge_algebra():
    _report(acceptance.check_hodge_algebra())


def test_criterion_03_constant_curvature():
    _report(acceptance.check_constant_curvature())


def test_criterion_04_weyl_conformal_invariance():
    _report(acceptance.check_weyl_conformal())


def test_criterion_05_integrability_dichotomy():
    _report(acceptance.check_integrability())


def test_criterion_06_J_conformal_invariance():
    _report(acceptance.check_J_conformal())


def test_criterion_07_four_conditions_equivalent():
    _report(acceptance.check_prop1())


def test_criterion_08_s4_not_almost_complex():
    _report(acceptance.check_s4_example())


def test_criterion_09_wu_positives():
    _report(acceptance.check_wu_positive())


def test_criterion_10_van_der_blij():
    _report(acceptance.check_van_der_blij())


@pytest.mark.slow
def test_criterion_11_selftest_determinism():
    cmd = [sys.executable, "-m", "twistorlab", "selftest", "--quiet"]
    procs = [subprocess.Popen(cmd, stdout=subprocess.PIPE) for _ in range(2)]
    outs = [p.communicate(timeout=600) for p in procs]
    codes = [p.returncode for p in procs]
    a, b = outs[0][0], outs[1][0]
    print(f"[{'PASS' if a == b else 'FAIL'}] 11. selftest reports are byte-identical  {len(a)} bytes")
    assert codes == [0, 0]
    assert a == b

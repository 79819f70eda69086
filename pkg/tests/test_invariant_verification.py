import pytest

from mweyl.canonical_system_solving import NonconvergenceError
from mweyl.invariant_verification import InvariantVerificationSuite

class StubbedSuite(InvariantVerificationSuite):

    def checks(self):
        def diverging():
            raise NonconvergenceError("cap reached")
        return [("passing", lambda: (True, "ok")), ("diverging", diverging)]

def test_nonconvergence_is_recorded_as_failure():
    suite = StubbedSuite()
    results = suite.run()
    assert [result.name for result in results] == ["passing", "diverging"]
    assert results[0].passed and not results[1].passed
    assert results[1].detail == "nonconvergence: cap reached"
    assert not suite.all_passed()
    assert "PASS passing: ok" in suite.get_log()
    assert "FAIL diverging" in suite.get_log()

def test_check_names_are_unique():
    names = [name for name, _ in InvariantVerificationSuite().checks()]
    assert len(names) == len(set(names)) == 11

@pytest.mark.parametrize("check", [
    "check_free_m_function",
    "check_catalog_oracles",
    "check_roundtrip",
    "check_potential_cross_check",
    "check_same_average",
    "check_weyl_machinery",
    "check_measure_truncation"
])
def test_fast_checks_pass(check):
    passed, detail = getattr(InvariantVerificationSuite(), check)()
    assert passed, detail

@pytest.mark.slow
def test_full_suite_passes():
    suite = InvariantVerificationSuite()
    suite.run()
    assert suite.all_passed(), suite.get_log()

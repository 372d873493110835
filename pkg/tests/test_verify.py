import pytest

from jcaco.errors import ConfigurationError
from jcaco.verify import expectation_suite, ne_suite, run_suite, sign_property_suite


def test_sign_suite_small():
    rep = sign_property_suite(trials=400, seed=3, instances=8)
    assert rep.ok
    assert set(rep.summary["views"]) == {"access/complete", "access/stochastic", "compute/complete", "compute/stochastic"}


def test_expectation_suite_small():
    rep = expectation_suite(seed=3, instances=4, mc_samples=5000, max_ues=8)
    assert rep.ok, rep.failures
    assert rep.summary["max_relative_error"] <= 1e-12


def test_ne_suite_small():
    rep = ne_suite(seed=3, instances=6)
    assert rep.ok, rep.failures


def test_dispatch_unknown():
    with pytest.raises(ConfigurationError):
        run_suite("everything")

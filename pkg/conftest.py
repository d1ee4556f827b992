"""Shared fixtures for the root-level test modules."""

import pytest

from csplift.config import Settings, set_settings
from csplift.conservative import build_gamma_prime_c
from csplift.siggers import build_gamma_prime
from csplift.templates import btw_template
from csplift.valued import independent_set_template


@pytest.fixture(autouse=True)
def default_settings():
    """Every test starts from the built-in limits; the CLI tests change them."""
    set_settings(Settings())
    yield
    set_settings(Settings())


@pytest.fixture(scope="session")
def gamma_prime_btw():
    return build_gamma_prime(btw_template())


@pytest.fixture(scope="session")
def gamma_prime_c():
    # roughly a million candidate pairs for the binary edge cost
    return build_gamma_prime_c(independent_set_template(), materialize=True)

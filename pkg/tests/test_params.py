import math

import pytest
from pydantic import ValidationError

from sav_bottleneck.core.errors import ParameterValidationError
from sav_bottleneck.core.params import (
    PARAM_FIELDS,
    ValidatedParams,
    derive,
    near_zero_discriminant,
    raw,
    validate,
)


def test_base_derived_constants(base):
    d = derive(base)
    assert d.a_prime == pytest.approx(8.0)
    assert d.a_coef == pytest.approx(2.4)
    assert d.b_coef == pytest.approx(96.0)
    assert d.eta == pytest.approx(3.3)
    assert d.discriminant == pytest.approx(4_064_256.0)
    assert d.k_root == pytest.approx(2016.0)
    assert d.n_min == pytest.approx((96.0 + math.sqrt(4 * 2.4 * 129600.0)) / 2.4)


def test_validate_tags_interior_and_viable(base):
    checked = validate(base)
    assert isinstance(checked, ValidatedParams)
    assert checked.validity.interior
    assert checked.validity.ac_viable
    assert validate(checked) is checked
    assert raw(checked) == base


def test_zero_fixed_cost_discriminant_is_square(base):
    d = derive(base.with_updates(f_a=0.0))
    assert d.discriminant == pytest.approx((2400.0 - 96.0) ** 2)
    assert validate(base.with_updates(f_a=0.0)).validity.ac_viable


def test_negative_discriminant_is_flagged_not_rejected(base):
    checked = validate(base.with_updates(f_a=600_000.0))
    assert not checked.validity.ac_viable
    assert derive(checked).k_root is None


def test_corner_when_b_not_positive(base):
    # m = 4 makes B = 0.7 * 10 + 4 - 11 = 0
    checked = validate(base.with_updates(m=4.0))
    assert not checked.validity.interior


@pytest.mark.parametrize(
    "changes",
    [
        {"kappa": 0.0},
        {"kappa": 1.0},
        {"theta": 1.2},
        {"beta": 0.8},
        {"mu": 0.0},
        {"n_total": -5.0},
        {"f_a": -1.0},
        {"gamma": float("nan")},
    ],
)
def test_validate_rejects_impossible_parameters(base, changes):
    with pytest.raises(ParameterValidationError):
        validate(base.with_updates(**changes))


def test_parameter_errors_are_value_errors(base):
    with pytest.raises(ValueError):
        validate(base.with_updates(beta=0.7))


def test_params_are_frozen(base):
    with pytest.raises(ValidationError):
        base.kappa = 0.5


def test_with_updates_leaves_original_untouched(base):
    other = base.with_updates(mu=0.05)
    assert other.mu == 0.05
    assert base.mu == 0.025
    assert derive(other).a_prime == pytest.approx(4.0)


def test_near_zero_discriminant_at_constructed_boundary(base):
    edge = base.with_updates(f_a=2304.0**2 / 9.6)
    assert near_zero_discriminant(edge)
    assert not near_zero_discriminant(base)


def test_param_fields_cover_model():
    assert set(PARAM_FIELDS) == {
        "n_total", "mu", "kappa", "theta", "beta", "gamma", "t_f", "f_n", "f_a", "m",
    }

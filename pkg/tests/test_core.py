import math

import numpy as np
import pytest

from rankdiff.core import (InitialState, ParameterError, SeedSpec, sign,
                           validate_params)


def test_sign_tie_convention():
    assert sign(0.0) == -1.0
    assert sign(3.2) == 1.0
    assert sign(-1e-300) == -1.0
    assert sign(1e-300) == 1.0


def test_sign_vectorized_and_never_zero():
    x = np.array([-2.0, -0.0, 0.0, 5e-324, 1.0])
    out = sign(x)
    assert out.tolist() == [-1.0, -1.0, -1.0, 1.0, 1.0]
    assert not np.any(out == 0.0)


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_sign_rejects_nonfinite(bad):
    with pytest.raises(ParameterError):
        sign(bad)


def test_validate_params_figure_case():
    p = validate_params(1.0, 1.0, 1.0, 0.0)
    assert p.lam == 2.0
    assert p.nu == 0.0
    assert p.gamma == 1.0
    assert p.mu == 1.0
    assert p.mixing_delta == 0.0


def test_validate_params_isotropic_case():
    r = 1.0 / math.sqrt(2.0)
    p = validate_params(1.0, 0.0, r, r)
    assert abs(p.gamma) < 1e-15
    assert abs(p.mixing_delta - 1.0) < 1e-15
    assert abs(p.mu - 0.5) < 1e-15
    assert p.is_isotropic and not p.is_degenerate


def test_validate_params_rejects_zero_intensity():
    with pytest.raises(ParameterError, match="g\\+h>0"):
        validate_params(0.0, 0.0, 1.0, 0.0)


def test_validate_params_rejects_negative_and_nonfinite():
    with pytest.raises(ParameterError, match="nonnegative"):
        validate_params(-0.1, 1.0, 1.0, 0.0)
    with pytest.raises(ParameterError, match="finite"):
        validate_params(float("nan"), 1.0, 1.0, 0.0)


def test_normalization_enforced_not_silently_fixed():
    with pytest.raises(ParameterError, match="normalization"):
        validate_params(1.0, 1.0, 0.9, 0.6)
    p = validate_params(1.0, 1.0, 0.9, 0.6, renormalize=True)
    assert abs(p.rho**2 + p.sigma**2 - 1.0) <= 1e-12


def test_mu_identity_both_ways():
    rng = np.random.default_rng(7)
    for _ in range(300):
        g, h = rng.uniform(0, 4), rng.uniform(0, 4)
        if g + h == 0:
            continue
        u = rng.uniform(0.0, math.pi / 2)
        p = validate_params(g, h, math.cos(u), math.sin(u), renormalize=True)
        other = 0.5 * (p.nu + p.lam * p.gamma)
        assert abs(p.mu - other) <= 1e-15 * max(1.0, abs(p.mu))
        assert abs(p.gamma**2 + p.mixing_delta**2 - 1.0) <= 1e-12


def test_initial_state_derived_fields():
    s = InitialState(0.25, -1.0)
    assert s.y == 1.25 and s.z == -0.75
    assert s.r1 == 0.25 and s.r2 == -1.0
    assert s.y + s.z == 2 * s.x1
    assert s.swapped().y == -1.25


def test_seedspec_reproducible_streams():
    a = SeedSpec(123, 5).generator().standard_normal(8)
    b = SeedSpec(123, 5).generator().standard_normal(8)
    c = SeedSpec(123, 6).generator().standard_normal(8)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert SeedSpec(123, 5).stream(3) == SeedSpec(123, 8)


def test_seedspec_validation():
    with pytest.raises(ParameterError):
        SeedSpec(1, -1)
    with pytest.raises(ParameterError):
        SeedSpec(2**64, 0)

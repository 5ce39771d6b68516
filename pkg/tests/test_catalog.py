import numpy as np
import pytest

from core.catalog import ProblemCatalog, ProblemCatalogEntry, ParamSpec, catalog_list, default_catalog, linear_drift
from core.coefficients import CoefficientSet, additive_jump, validate_coefficients
from core.errors import CoefficientError, ConfigError, UnknownKindError
from core.laws import InitialLaw
from core.measures import MarkMeasure

EXPECTED = {"zero", "bm", "cpoisson", "ou_jump", "rough_drift", "cor39_ode", "thm41_additive", "state_jump",
            "ou_jump_2d"}


def test_builtin_names(catalog):
    assert set(catalog.names()) == EXPECTED
    assert catalog.names() == sorted(catalog.names())
    assert "ou_jump" in catalog
    assert "nope" not in catalog


def test_unknown_problem(catalog):
    with pytest.raises(UnknownKindError):
        catalog.get("nope")


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_every_entry_satisfies_its_constants(catalog, name):
    cs, mu0 = catalog.get(name).build()
    assert cs.name == name
    assert set(cs.params) == set(catalog.get(name).parameters)
    assert not validate_coefficients(cs, n_probe=256, seed=11).violation
    assert mu0.dim == cs.dim


def test_parameter_errors(catalog):
    entry = catalog.get("ou_jump")
    with pytest.raises(ConfigError) as info:
        entry.build({"thetta": 1.0})
    assert info.value.field == "params.thetta"
    with pytest.raises(ConfigError) as info:
        entry.build({"theta": -1.0})
    assert info.value.field == "params.theta"
    with pytest.raises(ConfigError):
        entry.build({"theta": "fast"})
    with pytest.raises(ConfigError):
        entry.build({"theta": True})


def test_overrides_are_applied(catalog):
    cs, mu0 = catalog.get("ou_jump").build({"theta": 2.0, "s0": 0.0, "m0": 1.5})
    assert cs.params["theta"] == 2.0
    assert mu0 == InitialLaw(kind="point", loc=1.5)
    np.testing.assert_allclose(cs.b(0.0, np.array([[1.0]])), [[-2.0]])


def test_compensated_drift_carries_mean_jump(catalog):
    cs, _ = catalog.get("thm41_additive").build({"theta": 1.0, "gamma": 2.0, "lam": 3.0, "h": 0.5})
    np.testing.assert_allclose(cs.b(0.0, np.array([[0.0], [1.0]])), [[-3.0], [-4.0]])


def test_ode_limit_starts_from_a_point(catalog):
    _, mu0 = catalog.get("cor39_ode").build()
    assert mu0.kind == "point"
    assert mu0.loc == 1.0


def test_state_dependent_entries_are_marked(catalog):
    assert not catalog.get("state_jump").fpe_capable
    assert not catalog.get("ou_jump_2d").fpe_capable
    assert catalog.get("ou_jump").fpe_capable
    with pytest.raises(CoefficientError):
        catalog.get("state_jump").build()[0].additive_shifts()


def _steep_entry(C1):
    def build(p):
        cs = CoefficientSet(drift=linear_drift(10.0), diffusion=lambda t, x: np.zeros_like(x), jump_scale=0.0,
                            jump_amplitude=additive_jump, nu=MarkMeasure.zero(), C1=C1, C2=1.0)
        return cs, InitialLaw(kind="point")

    return ProblemCatalogEntry(name="steep", description="b = -10x", parameters={}, builder=build)


def test_registration_validates_growth():
    catalog = ProblemCatalog()
    with pytest.raises(CoefficientError):
        catalog.register(_steep_entry(C1=1.0))
    assert "steep" not in catalog
    catalog.register(_steep_entry(C1=10.0))
    assert catalog.names() == ["steep"]


def test_param_spec_bounds():
    spec = ParamSpec(1.0, 0.0, 2.0)
    assert spec.check("x", 2) == 2.0
    with pytest.raises(ConfigError):
        spec.check("x", float("nan"))


def test_listing_is_deterministic():
    text = catalog_list()
    assert text == default_catalog().listing()
    assert text.index("bm:") < text.index("zero:")
    assert "Monte Carlo only" in text

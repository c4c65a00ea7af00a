import pytest

from roughtransport import PiecewiseCoefficient, classify
from roughtransport.applicability import THEORIES, PlanarField, render_table
from roughtransport.cli import MATRIX_SCENARIOS, theory_matrices
from roughtransport.scenarios import build_coefficient

P = PiecewiseCoefficient

EXPECTED = {
    "sign": {"caratheodory": "fails", "forward-uniqueness": "fails", "filippov-basic": "applies",
             "hurd-sattinger": "applies", "diperna-lions-existence": "fails"},
    "-sign": {"caratheodory": "fails", "forward-uniqueness": "applies",
              "bouchut-james": "applies", "hurd-sattinger": "fails"},
    "H(-x)": {"bouchut-james": "fails", "hurd-sattinger": "fails",
              "lafon-oberguggenberger": "applies"},
    "moving jump": {"bouchut-james": "applies", "diperna-lions-uniqueness": "fails"},
    "2-d sigma=0.75": {"diperna-lions-existence": "applies", "diperna-lions-uniqueness": "applies",
                       "hurd-sattinger": "fails", "bouchut-james": "fails"},
    "2-d sigma=0.3": {"diperna-lions-existence": "applies", "diperna-lions-uniqueness": "fails",
                      "hurd-sattinger": "fails"},
    "tanh": {t: "applies" for t in THEORIES},
}


@pytest.fixture(scope="module")
def matrices():
    return {m.scenario: m for m in theory_matrices()}


def test_every_matrix_scenario_classified(matrices):
    assert len(MATRIX_SCENARIOS) == 6 and set(EXPECTED) == set(matrices)


@pytest.mark.parametrize("label", sorted(EXPECTED))
def test_verdicts(matrices, label):
    got = matrices[label]
    for theory, want in EXPECTED[label].items():
        assert got[theory] == want, (label, theory, got.verdicts[theory].reason)


def test_every_theory_has_a_verdict(matrices):
    for m in matrices.values():
        assert set(m.verdicts) == set(THEORIES)
        assert set(m.statuses().values()) <= {"applies", "fails", "unknown"}


def test_failures_name_a_condition(matrices):
    for m in matrices.values():
        for v in m.verdicts.values():
            if v.status == "fails":
                assert v.failed and v.reason.startswith("(")


def test_heaviside_fails_hurd_sattinger_lower_bound():
    m = classify(P.step("1", "0"), T=1.0)
    assert m["hurd-sattinger"] == "fails"
    assert "iii" in m.verdicts["hurd-sattinger"].failed


def test_missing_exponent_is_unknown():
    m = classify(P.smooth("sin(x)", derivatives=["cos(x)"]), u0_class="Lp", T=1.0)
    assert m["diperna-lions-existence"] == "unknown"
    assert "missing metadata" in m.verdicts["diperna-lions-existence"].reason


def test_measure_data_fail_renormalized_theory():
    m = classify(P.constant(1.0), u0_class="measure", T=1.0)
    assert m["diperna-lions-existence"] == "fails"


def test_undeclared_planar_gradient_is_unknown():
    f = PlanarField.from_text("x", "-y", "0")
    m = classify(f, dimension=2, p=2)
    assert m["diperna-lions-uniqueness"] == "unknown"
    assert m["lafon-oberguggenberger"] == "unknown"


def test_gradient_tag_threshold():
    cfg = {"planar": {"a1": "pow(pos(x-y),0.5)", "a2": "pow(pos(x-y),0.5)", "div": "0",
                       "regularity": {"continuous": True,
                                      "gradient_singularity": {"exponent": 0.5, "codim": 1}}}}
    f = build_coefficient(cfg)
    assert classify(f, dimension=2, p=3)["diperna-lions-uniqueness"] == "applies"
    assert classify(f, dimension=2, p=2)["diperna-lions-uniqueness"] == "fails"


def test_three_dimensions_refused():
    with pytest.raises(ValueError):
        classify(P.constant(1.0), dimension=3)


def test_matrix_json_and_table(matrices):
    m = matrices["tanh"]
    data = m.to_json()
    assert data["scenario"] == "tanh" and list(data["verdicts"]) == list(THEORIES)
    table = render_table(list(matrices.values()))
    assert table.count("\n") == len(matrices)

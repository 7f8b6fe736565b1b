import json
from pathlib import Path

import pytest

from seqlearn import scenario as scn

SCEN_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def test_default_is_canonical_example():
    sc = scn.default()
    assert sc.c == 1.0 and sc.I_bar == pytest.approx(1.0) and sc.Vstar == pytest.approx(1.0)
    assert sc.discount.kind == "exponential"


@pytest.mark.parametrize("path", sorted(SCEN_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_load(path):
    scn.load(path)


@pytest.mark.parametrize("raw,fragment", [
    ({"c": -1}, "c"),
    ({"prior": [0.5, 0.6]}, "sum"),
    ({"target": {"atoms": [{"posterior": 0.0, "prob": 0.5},
                           {"posterior": 0.8, "prob": 0.5}]}}, "prior"),
    ({"discount": {"kind": "tabulated", "times": [0, 1, 2, 3], "values": [1, 1, 1, 0]}},
     "convex"),
    ({"unknown": 1}, "unknown"),
    ({"states": 3, "prior": [0.2, 0.3, 0.5], "F": {"kind": "binary_match"}}, "two states"),
])
def test_invalid_scenarios(raw, fragment):
    with pytest.raises(scn.ScenarioError, match=fragment):
        scn.from_dict(raw)


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(scn.ScenarioError):
        scn.load(bad)


def test_overrides(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"c": 0.25, "I_bar": 1.0, "Vstar": 2.0}))
    sc = scn.load(p)
    assert sc.I_bar == 1.0 and sc.Vstar == 2.0

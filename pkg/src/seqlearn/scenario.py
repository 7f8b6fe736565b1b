"""Scenario files: JSON schema, validation and construction of model objects.

Every field is optional; omitted fields take the values of the canonical
binary example (prior 1/2, full-revelation target, quadratic H, c = 1,
exponential discounting at rate 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import discount as disc
from .measure import (DecisionUtility, PosteriorLottery, UncertaintyMeasure, as_belief,
                      bayes_plausible, entropy, quadratic, tabulated)
from .strategies import StrategySpec


class ScenarioError(ValueError):
    pass


_belief = {"oneOf": [{"type": "number", "minimum": 0, "maximum": 1},
                     {"type": "array", "items": {"type": "number", "minimum": 0},
                      "minItems": 2}]}

_discount = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["exponential", "hyperbolic", "truncated_linear", "constant_delay",
                          "constant", "tabulated", "mixture"]},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "k": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "kappa": {"type": "number", "exclusiveMinimum": 0},
        "times": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number"}},
        "allow_nonconvex": {"type": "boolean"},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "components": {"type": "array", "items": {"$ref": "#/$defs/discount"}},
    },
    "additionalProperties": False,
}

_dist = {"oneOf": [
    {"type": "string"},  # path to a t,cdf CSV
    {"type": "object", "required": ["kind"],
     "properties": {"kind": {"enum": ["deterministic", "exponential", "geometric",
                                      "gaussian_fpt", "csv"]},
                    "time": {"type": "number", "minimum": 0},
                    "rate": {"type": "number", "exclusiveMinimum": 0},
                    "q": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "start": {"type": "number"}, "lo": {"type": "number"},
                    "hi": {"type": "number"}, "sigma2": {"type": "number", "exclusiveMinimum": 0},
                    "path": {"type": "string"}},
     "additionalProperties": False},
]}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "seqlearn scenario",
    "type": "object",
    "$defs": {"discount": _discount},
    "properties": {
        "name": {"type": "string"},
        "states": {"type": "integer", "minimum": 2, "maximum": 4},
        "prior": _belief,
        "H": {"type": "object", "required": ["kind"],
              "properties": {"kind": {"enum": ["quadratic", "entropy", "tabulated"]},
                             "grid": {"type": "array", "items": {"type": "number"}},
                             "values": {"type": "array", "items": {"type": "number"}}},
              "additionalProperties": False},
        "target": {"type": "object", "required": ["atoms"],
                   "properties": {"atoms": {"type": "array", "minItems": 1, "items": {
                       "type": "object", "required": ["posterior", "prob"],
                       "properties": {"posterior": _belief,
                                      "prob": {"type": "number", "minimum": 0, "maximum": 1}},
                       "additionalProperties": False}}},
                   "additionalProperties": False},
        "F": {"type": "object", "required": ["kind"],
              "properties": {"kind": {"enum": ["binary_match", "max_affine"]},
                             "payoffs": {"type": "array",
                                         "items": {"type": "array", "items": {"type": "number"}}}},
              "additionalProperties": False},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "I_bar": {"type": "number", "exclusiveMinimum": 0},
        "Vstar": {"type": "number", "minimum": 0},
        "discount": {"$ref": "#/$defs/discount"},
        "mode": {"enum": ["discrete", "continuous"]},
        "T": {"type": "integer", "minimum": 2, "maximum": 64},
        "grids": {"type": "object",
                  "properties": {"p": {"type": "integer", "minimum": 2},
                                 "I": {"type": "integer", "minimum": 2},
                                 "time": {"type": "integer", "minimum": 11},
                                 "belief": {"type": "integer", "minimum": 101}},
                  "additionalProperties": False},
        "seeds": {"type": "object", "properties": {"mc": {"type": "integer", "minimum": 0}},
                  "additionalProperties": False},
        "mc": {"type": "object",
               "properties": {"paths": {"type": "integer", "minimum": 1},
                              "dt": {"type": "number", "exclusiveMinimum": 0},
                              "horizon": {"type": "number", "exclusiveMinimum": 0},
                              "checkpoints": {"type": "array",
                                              "items": {"type": "number", "minimum": 0}},
                              "bias_study_dts": {"type": "array",
                                                 "items": {"type": "number",
                                                           "exclusiveMinimum": 0}},
                              "bias_study_paths": {"type": "integer", "minimum": 1}},
               "additionalProperties": False},
        "target_opts": {"type": "object",
                        "properties": {"sweep_priors": {"type": "array",
                                                        "items": {"type": "number"}},
                                       "rate_sweep": {"type": "array",
                                                      "items": {"type": "number", "minimum": 0}},
                                       "max_iter": {"type": "integer", "minimum": 1},
                                       "tol": {"type": "number", "exclusiveMinimum": 0}},
                        "additionalProperties": False},
        "sosd": {"type": "object", "required": ["d1", "d2"],
                 "properties": {"d1": _dist, "d2": _dist}, "additionalProperties": False},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True, eq=False)
class Scenario:
    raw: dict
    name: str
    prior: np.ndarray
    H: UncertaintyMeasure
    target: PosteriorLottery
    F: DecisionUtility
    c: float
    discount: disc.DiscountFunction
    mode: str = "continuous"
    T: int = 6
    grids: dict = field(default_factory=dict)
    seed: int = 42
    mc: dict = field(default_factory=dict)
    target_opts: dict = field(default_factory=dict)
    sosd: dict | None = None

    @property
    def I_bar(self) -> float:
        if "I_bar" in self.raw:
            return float(self.raw["I_bar"])
        from .measure import info_cost
        return info_cost(self.target, self.H)

    @property
    def Vstar(self) -> float:
        if "Vstar" in self.raw:
            return float(self.raw["Vstar"])
        return float(self.target.probs @ np.asarray(self.F(self.target.posteriors)))

    def strategy(self, kind: str) -> StrategySpec:
        return StrategySpec(kind, self.c, self.H, self.target, self.F)


def _build_H(spec: dict) -> UncertaintyMeasure:
    kind = spec["kind"]
    if kind == "quadratic":
        return quadratic()
    if kind == "entropy":
        return entropy()
    return tabulated(spec["grid"], spec["values"])


def _build_F(spec: dict, n_states: int) -> DecisionUtility:
    if spec["kind"] == "binary_match":
        if n_states != 2:
            raise ScenarioError("binary_match needs two states")
        return DecisionUtility.binary_match()
    u = np.asarray(spec["payoffs"], dtype=float)
    if u.ndim != 2 or u.shape[1] != n_states:
        raise ScenarioError("payoffs must be an (actions x states) matrix")
    return DecisionUtility.max_affine(u)


def from_dict(raw: dict) -> Scenario:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{where}: {exc.message}") from None
    try:
        prior = as_belief(raw.get("prior", 0.5))
        n = int(raw.get("states", prior.size))
        if prior.size != n:
            raise ScenarioError(f"prior has {prior.size} states, expected {n}")
        H = _build_H(raw.get("H", {"kind": "quadratic"}))
        if "target" in raw:
            atoms = [(a["posterior"], a["prob"]) for a in raw["target"]["atoms"]]
        else:
            atoms = [(np.eye(n)[i], float(prior[i])) for i in range(n)]
        target = PosteriorLottery.from_atoms(atoms, prior)
        if not bayes_plausible(target):
            raise ScenarioError("target atoms do not average to the prior")
        F = _build_F(raw.get("F", {"kind": "binary_match" if n == 2 else "max_affine",
                                    "payoffs": np.eye(n).tolist()}), n)
        rho = disc.from_json(raw.get("discount", {"kind": "exponential", "rate": 1.0}))
    except ScenarioError:
        raise
    except (ValueError, KeyError) as exc:
        raise ScenarioError(str(exc)) from None
    return Scenario(raw=raw, name=raw.get("name", "scenario"), prior=prior, H=H, target=target,
                    F=F, c=float(raw.get("c", 1.0)), discount=rho,
                    mode=raw.get("mode", "continuous"), T=int(raw.get("T", 6)),
                    grids=dict(raw.get("grids", {})),
                    seed=int(raw.get("seeds", {}).get("mc", 42)), mc=dict(raw.get("mc", {})),
                    target_opts=dict(raw.get("target_opts", {})), sosd=raw.get("sosd"))


def load(path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return from_dict(raw)


def default() -> Scenario:
    return from_dict({})

"""JSON formats for problems, solutions and verification reports."""
from __future__ import annotations

import json
import math

import numpy as np

from .problem import Dims, PeriodicMatrixFunction, Problem
from .solution import PeriodicSymSolution

_SINGLE = ("M", "L1", "L2", "R11", "R12", "R22")
_LISTS = ("A", "B1", "B2")


class FormatError(ValueError):
    """A document does not follow the expected layout."""


def _coeff_to_dict(f: PeriodicMatrixFunction) -> dict:
    if f.is_constant:
        return {"constant": f.mean.tolist()}
    return {"fourier": {"mean": f.mean.tolist(),
                        "harmonics": [{"cos": c.tolist(), "sin": s.tolist()}
                                      for c, s in f.harmonics]}}


def _coeff_from_dict(d, period) -> PeriodicMatrixFunction:
    if not isinstance(d, dict) or len(d) != 1:
        raise FormatError("a coefficient must be {'constant': ...} or {'fourier': ...}")
    if "constant" in d:
        return PeriodicMatrixFunction.constant(d["constant"])
    if "fourier" in d:
        if period is None:
            raise FormatError("Fourier coefficient in a time-invariant problem")
        f = d["fourier"]
        hs = [(h["cos"], h["sin"]) for h in f.get("harmonics", [])]
        return PeriodicMatrixFunction.fourier(f["mean"], hs, period)
    raise FormatError(f"unknown coefficient kind {next(iter(d))!r}")


def problem_to_dict(p: Problem) -> dict:
    d = p.dims
    out = {"dims": {"n": d.n, "m1": d.m1, "m2": d.m2, "r": d.r}, "period": p.period}
    for name in _LISTS:
        out[name] = [_coeff_to_dict(f) for f in getattr(p, name)]
    for name in _SINGLE:
        out[name] = _coeff_to_dict(getattr(p, name))
    return out


def problem_from_dict(doc: dict) -> Problem:
    try:
        dims = Dims(**{k: int(doc["dims"][k]) for k in ("n", "m1", "m2", "r")})
        period = doc.get("period")
        period = None if period is None else float(period)
        lists = {name: tuple(_coeff_from_dict(c, period) for c in doc[name]) for name in _LISTS}
        single = {name: _coeff_from_dict(doc[name], period) for name in _SINGLE}
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed problem document: {exc!r}") from exc
    return Problem(dims, lists["A"], lists["B1"], lists["B2"], period=period, **single)


def solution_to_dict(X: PeriodicSymSolution) -> dict:
    if X.is_constant:
        return {"kind": "constant", "X": X.samples.tolist()}
    return {"kind": "grid", "theta": X.period, "nodes": X.nodes,
            "samples": X.samples.tolist(),
            "derivatives": X._derivs().tolist()}


def solution_from_dict(doc: dict) -> PeriodicSymSolution:
    try:
        kind = doc["kind"]
        if kind == "constant":
            return PeriodicSymSolution.constant(doc["X"])
        if kind == "grid":
            samples = np.array(doc["samples"], dtype=float)
            if samples.shape[0] != int(doc["nodes"]) + 1:
                raise FormatError("grid solution needs nodes+1 samples")
            derivs = doc.get("derivatives")
            return PeriodicSymSolution.grid(samples, derivs, float(doc["theta"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed solution document: {exc!r}") from exc
    raise FormatError(f"unknown solution kind {kind!r}")


def _finite(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    return obj


def read_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def write_json(path, doc) -> None:
    with open(path, "w") as f:
        json.dump(_finite(doc), f, indent=1, allow_nan=False)
        f.write("\n")


def load_problem(path) -> Problem:
    return problem_from_dict(read_json(path))


def save_problem(path, p: Problem) -> None:
    write_json(path, problem_to_dict(p))


def load_solution(path) -> PeriodicSymSolution:
    return solution_from_dict(read_json(path))


def save_solution(path, X: PeriodicSymSolution) -> None:
    write_json(path, solution_to_dict(X))

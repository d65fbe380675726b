"""Solver run reports and embedding / report file formats."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParseError


@dataclass
class SolverReport:
    solver: str
    objective: float
    iterations: int
    seconds: float
    trace: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "seconds": float(self.seconds),
            "trace": [[int(s), float(v)] for s, v in self.trace],
            **{k: _plain(v) for k, v in self.extra.items()},
        }


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def write_report(report: SolverReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def read_report(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_embedding(U: np.ndarray, path: str | os.PathLike) -> None:
    """One row per vertex, comma separated, 17 significant digits."""
    np.savetxt(path, np.atleast_2d(U), delimiter=",", fmt="%.17g")


def read_embedding(path: str | os.PathLike) -> np.ndarray:
    try:
        U = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None
    if not np.all(np.isfinite(U)):
        raise ParseError("non-finite value in embedding", path)
    return U

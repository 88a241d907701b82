"""Error metrics and report emission."""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import UndefinedMape
from .validation import as_float_vector, check_same_length


def mape(y_true, y_pred):
    """Mean absolute percentage error, in percent.

    Each term is computed as (100 * |err|) / |truth| so that exact decimal
    cases stay exact in binary floating point.
    """
    y_true = as_float_vector(y_true, "y_true")
    y_pred = as_float_vector(y_pred, "y_pred")
    check_same_length(y_true, y_pred)
    if y_true.size == 0:
        raise ValueError("mape needs at least one element")
    if np.any(y_true == 0):
        raise UndefinedMape("y_true contains zeros")
    return float(np.mean(100.0 * np.abs(y_true - y_pred) / np.abs(y_true)))


def mse(y_true, y_pred):
    """Mean squared error."""
    y_true = as_float_vector(y_true, "y_true")
    y_pred = as_float_vector(y_pred, "y_pred")
    check_same_length(y_true, y_pred)
    if y_true.size == 0:
        raise ValueError("mse needs at least one element")
    return float(np.mean((y_true - y_pred) ** 2))


@dataclass(frozen=True)
class RowEval:
    id: str
    y_true: float
    y_pred: float
    abs_pct_err: float


@dataclass(frozen=True)
class EvalReport:
    """Aggregate and per-row prediction errors. Empty reports carry None aggregates."""

    mape: float
    mse: float
    n: int
    per_row: tuple

    @classmethod
    def from_predictions(cls, ids, y_true, y_pred):
        y_true = as_float_vector(y_true, "y_true")
        y_pred = as_float_vector(y_pred, "y_pred")
        check_same_length(y_true, y_pred)
        ids = [str(i) for i in ids]
        if len(ids) != len(y_true):
            raise ValueError("ids and values differ in length")
        if len(ids) == 0:
            return cls(mape=None, mse=None, n=0, per_row=())
        per_row = tuple(
            RowEval(
                id=i,
                y_true=float(t),
                y_pred=float(p),
                abs_pct_err=float(100.0 * abs(t - p) / abs(t)),
            )
            for i, t, p in zip(ids, y_true, y_pred)
        )
        return cls(
            mape=mape(y_true, y_pred),
            mse=mse(y_true, y_pred),
            n=len(ids),
            per_row=per_row,
        )

    def to_dict(self):
        return {
            "n": self.n,
            "mape": self.mape,
            "mse": self.mse,
            "per_row": [
                {
                    "id": r.id,
                    "y_true": r.y_true,
                    "y_pred": r.y_pred,
                    "abs_pct_err": r.abs_pct_err,
                }
                for r in self.per_row
            ],
        }

    @classmethod
    def from_dict(cls, data):
        per_row = tuple(
            RowEval(r["id"], r["y_true"], r["y_pred"], r["abs_pct_err"])
            for r in data["per_row"]
        )
        return cls(mape=data["mape"], mse=data["mse"], n=data["n"], per_row=per_row)


def emit_report(report, fmt, path):
    """Write an EvalReport as JSON or as a per-row CSV."""
    if fmt == "json":
        with open(path, "w") as handle:
            json.dump(report.to_dict(), handle, indent=2)
            handle.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["id", "y_true", "y_pred", "abs_pct_err"])
            for r in report.per_row:
                writer.writerow([r.id, repr(r.y_true), repr(r.y_pred), repr(r.abs_pct_err)])
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def load_report(path):
    with open(path) as handle:
        return EvalReport.from_dict(json.load(handle))

"""Sweep output rows and their CSV serialisation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = (
    "sweep_value", "replication", "seed", "solver", "nu", "rho_star", "p_star",
    "u_bs", "u_pb", "gamma_min", "p_nonoutage_hat", "antenna_powers",
)
SUMMARY_FIELDS = ("nu", "rho_star", "p_star", "u_bs", "u_pb", "gamma_min")


@dataclass(frozen=True)
class SweepRecord:
    sweep_value: float
    replication: int
    seed: int
    solver: str
    nu: float
    rho_star: float
    p_star: float
    u_bs: float
    u_pb: float
    gamma_min: float
    p_nonoutage_hat: float | None = None
    per_antenna_power: tuple[float, ...] | None = None

    def sort_key(self):
        return (self.sweep_value, self.replication, self.solver)


def fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


def _row(r: SweepRecord):
    ap = "" if r.per_antenna_power is None else ";".join(fmt(p) for p in r.per_antenna_power)
    return [fmt(r.sweep_value), str(r.replication), str(r.seed), r.solver, fmt(r.nu), fmt(r.rho_star),
            fmt(r.p_star), fmt(r.u_bs), fmt(r.u_pb), fmt(r.gamma_min), fmt(r.p_nonoutage_hat), ap]


def emit_csv(records, path) -> Path:
    """Write records sorted by (sweep_value, replication, solver)."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in sorted(records, key=SweepRecord.sort_key):
            w.writerow(_row(r))
    return path


def read_csv(path) -> list[SweepRecord]:
    out = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for row in reader:
            opt = lambda k: float(row[k]) if row[k] != "" else None  # noqa: E731
            ap = row["antenna_powers"]
            out.append(SweepRecord(
                sweep_value=float(row["sweep_value"]),
                replication=int(row["replication"]),
                seed=int(row["seed"]),
                solver=row["solver"],
                nu=float(row["nu"]),
                rho_star=float(row["rho_star"]),
                p_star=float(row["p_star"]),
                u_bs=float(row["u_bs"]),
                u_pb=float(row["u_pb"]),
                gamma_min=float(row["gamma_min"]),
                p_nonoutage_hat=opt("p_nonoutage_hat"),
                per_antenna_power=None if ap == "" else tuple(float(v) for v in ap.split(";")),
            ))
    return out


def summarize(records):
    """Mean and standard deviation across replications per (sweep_value, solver)."""
    groups: dict[tuple[float, str], list[SweepRecord]] = {}
    for r in records:
        groups.setdefault((r.sweep_value, r.solver), []).append(r)
    rows = []
    for (value, solver) in sorted(groups):
        rs = groups[(value, solver)]
        row = {"sweep_value": value, "solver": solver, "n": len(rs)}
        for f in SUMMARY_FIELDS:
            xs = np.array([getattr(r, f) for r in rs], dtype=float)
            row[f"{f}_mean"] = float(xs.mean())
            row[f"{f}_std"] = float(xs.std(ddof=1)) if len(xs) > 1 else 0.0
        rows.append(row)
    return rows


def emit_summary_csv(records, path) -> Path:
    rows = summarize(records)
    path = Path(path)
    cols = ["sweep_value", "solver", "n"] + [f"{f}_{s}" for f in SUMMARY_FIELDS for s in ("mean", "std")]
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else str(v) for v in (row[c] for c in cols)])
    return path


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))


def close_12(a, b) -> bool:
    """Equality to 12 significant digits."""
    if a is None or b is None:
        return a is b
    return math.isclose(a, b, rel_tol=5e-12, abs_tol=0.0) or a == b

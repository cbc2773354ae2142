"""Per-day result records and their file round-trips.

Floats are serialized with ``repr`` so CSV and JSON files reproduce the
in-memory values bit for bit when read back.
"""

import csv
import json
from dataclasses import dataclass, field
from datetime import date as date_type

import numpy as np

from .errors import DataError

DAY_COLUMNS = (
    "date", "session", "n_returns",
    "qv11", "qv12", "qv22",
    "ic11", "ic12_jwc", "ic22",
    "ic12_star",
    "cj11", "cj12", "cj22",
    "rc12", "bc12",
    "z_stat", "rejected", "cojump_day", "n_cojumps",
    "total_corr", "cont_corr",
    "warnings",
)

COJUMP_COLUMNS = ("date", "session", "index", "size_1", "size_2", "direction")


@dataclass(frozen=True)
class DayResult:
    """Estimates and test outcome for one trading day and session."""

    date: date_type
    session: str
    n_returns: int
    qv: np.ndarray            # (2,2) total covariation, two-scale based
    ic: np.ndarray            # (2,2) jump-robust integrated covariance
    cj: np.ndarray            # (2,2) flagged jump variation
    ic12_star: float          # test-screened off-diagonal IC
    rc12: float
    bc12: float
    z_stat: float
    rejected: bool
    cojump_day: bool
    n_cojumps: int
    total_corr: float
    cont_corr: float
    warnings: tuple = ()

    def row(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "session": self.session,
            "n_returns": self.n_returns,
            "qv11": self.qv[0, 0], "qv12": self.qv[0, 1], "qv22": self.qv[1, 1],
            "ic11": self.ic[0, 0], "ic12_jwc": self.ic[0, 1], "ic22": self.ic[1, 1],
            "ic12_star": self.ic12_star,
            "cj11": self.cj[0, 0], "cj12": self.cj[0, 1], "cj22": self.cj[1, 1],
            "rc12": self.rc12, "bc12": self.bc12,
            "z_stat": self.z_stat,
            "rejected": self.rejected, "cojump_day": self.cojump_day,
            "n_cojumps": self.n_cojumps,
            "total_corr": self.total_corr, "cont_corr": self.cont_corr,
            "warnings": ";".join(self.warnings),
        }

    @classmethod
    def from_row(cls, row: dict) -> "DayResult":
        def f(key):
            return float(row[key])

        def b(key):
            return str(row[key]).strip().lower() in ("true", "1")

        qv = np.array([[f("qv11"), f("qv12")], [f("qv12"), f("qv22")]])
        ic = np.array([[f("ic11"), f("ic12_jwc")], [f("ic12_jwc"), f("ic22")]])
        cj = np.array([[f("cj11"), f("cj12")], [f("cj12"), f("cj22")]])
        warn = str(row.get("warnings", "") or "")
        return cls(
            date=date_type.fromisoformat(row["date"]),
            session=row["session"],
            n_returns=int(row["n_returns"]),
            qv=qv, ic=ic, cj=cj,
            ic12_star=f("ic12_star"), rc12=f("rc12"), bc12=f("bc12"),
            z_stat=f("z_stat"), rejected=b("rejected"), cojump_day=b("cojump_day"),
            n_cojumps=int(row["n_cojumps"]),
            total_corr=f("total_corr"), cont_corr=f("cont_corr"),
            warnings=tuple(w for w in warn.split(";") if w),
        )


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_day_results_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DAY_COLUMNS)
        for res in results:
            row = res.row()
            writer.writerow([_fmt(row[c]) for c in DAY_COLUMNS])


def read_day_results_csv(path) -> list:
    out = []
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != list(DAY_COLUMNS):
            raise DataError(f"{path}: unexpected day-result header {reader.fieldnames}")
        for line_no, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise DataError(f"{path} line {line_no}: wrong field count")
            try:
                out.append(DayResult.from_row(row))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path} line {line_no}: {exc}") from exc
    return out


def write_cojump_records_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COJUMP_COLUMNS)
        for rec in records:
            writer.writerow([
                rec.date.isoformat() if rec.date else "",
                rec.session or "",
                rec.index,
                _fmt(rec.size_1), _fmt(rec.size_2), rec.direction,
            ])


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def day_results_payload(results) -> list[dict]:
    rows = []
    for res in results:
        row = res.row()
        rows.append({k: (bool(v) if isinstance(v, (bool, np.bool_)) else
                         float(v) if isinstance(v, (float, np.floating)) else v)
                     for k, v in row.items()})
    return rows

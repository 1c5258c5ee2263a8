"""Inequality reports and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

CSV_COLUMNS = ("name", "family", "p", "lhs", "rhs", "ratio", "tracked_constant", "pass")

# relative slack for float ties such as E V~_T = E V_T at ratio exactly 1
REL_TOL = 1e-12
ABS_TOL = 1e-14


@dataclass
class InequalityReport:
    """One checked inequality ``lhs <= C * rhs``.

    ``tracked_constant`` is the constant read off the proof being
    replayed; when it is ``None`` the suite-level ``cap`` is used
    instead.  ``links`` holds the intermediate reports of a proof chain
    and all of them must pass for the report to pass.  ``slack`` is an
    additive allowance used for statistical estimates.
    """

    name: str
    p: float
    lhs: float
    rhs: float
    tracked_constant: float | None = None
    family: str = ""
    cap: float | None = None
    links: list["InequalityReport"] = field(default_factory=list)
    degenerate: bool = False
    slack: float = 0.0
    passed: bool = field(init=False)
    ratio: float = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.p = float(self.p)
        constant = self.constant
        if self.rhs == 0:
            self.degenerate = True
            self.ratio = 0.0 if self.lhs <= ABS_TOL else math.inf
            ok = self.lhs <= ABS_TOL
        else:
            self.ratio = self.lhs / self.rhs
            ok = constant is not None and self.lhs <= constant * self.rhs * (1 + REL_TOL) + ABS_TOL + self.slack
        self.passed = bool(ok and all(link.passed for link in self.links))

    @property
    def constant(self) -> float | None:
        return self.tracked_constant if self.tracked_constant is not None else self.cap

    def failing_links(self) -> list["InequalityReport"]:
        return [link for link in self.links if not link.passed]

    def to_row(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "p": self.p,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "tracked_constant": self.tracked_constant,
            "pass": self.passed,
        }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(reports: list[InequalityReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        row = r.to_row()
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(reports: list[InequalityReport]) -> str:
    rows = []
    for r in reports:
        row = r.to_row()
        # strict JSON has no NaN or infinity
        if math.isnan(row["p"]):
            row["p"] = None
        for key in ("lhs", "rhs", "ratio"):
            if not math.isfinite(row[key]):
                row[key] = str(row[key])
        rows.append(row)
    return json.dumps(rows, indent=2)


def worst(reports: list[InequalityReport], name: str | None = None, family: str | None = None) -> InequalityReport:
    """Collapse a sweep into one row: the member with the largest ratio.

    The returned row passes only if every member passed.
    """
    if not reports:
        raise ValueError("empty sweep")
    top = max(reports, key=lambda r: (not r.passed, r.ratio))
    out = InequalityReport(
        name or top.name,
        top.p,
        top.lhs,
        top.rhs,
        top.tracked_constant,
        family if family is not None else top.family,
        cap=top.cap,
    )
    out.passed = all(r.passed for r in reports)
    return out

"""Verification reports and their newline-delimited JSON encoding."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not_applicable"
REJECTED = "rejected"


def fmt(x: float) -> str:
    """Decimal string with 17 significant digits (round-trips a double)."""
    return format(float(x), ".17g")


def fmt_complex(z: complex) -> list[str]:
    z = complex(z)
    return [fmt(z.real), fmt(z.imag)]


@dataclass
class VerificationReport:
    identity_id: str
    tol: float
    samples: list[tuple[Any, float]] = field(default_factory=list)
    status: str | None = None
    params_echo: dict[str, Any] = field(default_factory=dict)
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((float(r) for _, r in self.samples), default=0.0)

    def __post_init__(self):
        if self.status is None:
            self.status = PASS if self.max_residual <= self.tol else FAIL

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def ok(self) -> bool:
        """Pass or not-applicable: neither counts against a suite."""
        return self.status in (PASS, NOT_APPLICABLE)

    def to_dict(self) -> dict[str, Any]:
        samples = []
        for point, res in self.samples:
            if isinstance(point, complex):
                point = fmt_complex(point)
            samples.append({"point": point, "residual": fmt(res)})
        return {
            "identity_id": self.identity_id,
            "status": self.status,
            "max_residual": fmt(self.max_residual),
            "tol": fmt(self.tol),
            "params_echo": self.params_echo,
            "samples": samples,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def merge(identity_id: str, reports: list[VerificationReport], tol: float) -> VerificationReport:
    """Aggregate sub-reports into one; fails if any constituent failed."""
    samples = []
    for r in reports:
        samples.extend(r.samples)
    statuses = {r.status for r in reports}
    status = FAIL if FAIL in statuses else None
    if REJECTED in statuses:
        status = REJECTED
    out = VerificationReport(identity_id, tol, samples, status)
    out.notes["parts"] = {r.identity_id: r.status for r in reports}
    return out

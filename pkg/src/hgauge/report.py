"""Check results and their human / machine renderings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class CheckResult:
    name: str
    eq: str
    passed: bool
    residual_terms: int
    notes: str = ""
    time_ms: float = 0.0


@dataclass
class Report:
    scenario_hash: str
    checks: list[CheckResult] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    spot_checks: list[dict] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def exit_code(self) -> int:
        return 0 if self.all_pass else 1


def emit_human(r: Report, timing: bool = True) -> str:
    if not r.checks:
        body = ["(no checks ran)"]
    else:
        wn = max(len(c.name) for c in r.checks)
        we = max(len(c.eq) for c in r.checks) + 2
        wk = max(len(str(c.residual_terms)) for c in r.checks)
        body = []
        for c in r.checks:
            line = (
                f"CHECK {c.name:<{wn}} {'[' + c.eq + ']':<{we}} {'PASS' if c.passed else 'FAIL'}"
                f" residual_terms={c.residual_terms:<{wk}}"
            )
            if timing:
                line += f" time={c.time_ms:.0f}"
            if c.notes:
                line += f"  # {c.notes}"
            body.append(line.rstrip())
    lines = [f"scenario {r.scenario_hash}"]
    lines += [f"WARNING {w}" for w in r.warnings]
    lines += body
    lines += [f"SKIP {s}" for s in r.skipped]
    for s in r.spot_checks:
        lines.append(f"SPOT {s['name']} points={s['points']} {'ok' if s['ok'] else 'MISMATCH'}")
    n_fail = len(r.failures())
    lines.append(
        f"SUMMARY {len(r.checks) - n_fail}/{len(r.checks)} passed"
        + (f"; failing: {', '.join(c.name for c in r.failures())}" if n_fail else "")
    )
    return "\n".join(lines) + "\n"


def to_machine(r: Report, timing: bool = True) -> dict:
    checks = []
    for c in r.checks:
        d = {"name": c.name, "eq": c.eq, "pass": c.passed, "residual_terms": c.residual_terms, "notes": c.notes}
        if timing:
            d["time_ms"] = round(c.time_ms, 3)
        checks.append(d)
    doc = {"scenario_hash": r.scenario_hash, "checks": checks, "all_pass": r.all_pass}
    if r.skipped:
        doc["skipped"] = list(r.skipped)
    if r.warnings:
        doc["warnings"] = list(r.warnings)
    if r.spot_checks:
        doc["spot_checks"] = list(r.spot_checks)
    return doc


def emit_machine(r: Report, timing: bool = True) -> str:
    return json.dumps(to_machine(r, timing), indent=2, sort_keys=False) + "\n"


def emit_report(r: Report, fmt: str = "human", timing: bool = True) -> str:
    if fmt == "human":
        return emit_human(r, timing)
    if fmt == "machine":
        return emit_machine(r, timing)
    raise ValueError(f"unknown report format {fmt!r}")


def parse_machine(text: str) -> Report:
    doc = json.loads(text)
    checks = [
        CheckResult(
            name=c["name"],
            eq=c["eq"],
            passed=bool(c["pass"]),
            residual_terms=int(c["residual_terms"]),
            notes=c.get("notes", ""),
            time_ms=float(c.get("time_ms", 0.0)),
        )
        for c in doc["checks"]
    ]
    r = Report(
        doc["scenario_hash"],
        checks,
        list(doc.get("skipped", [])),
        list(doc.get("warnings", [])),
        list(doc.get("spot_checks", [])),
    )
    if r.all_pass != doc["all_pass"]:
        raise ValueError("all_pass disagrees with the check list")
    return r


def strip_timing(text: str) -> str:
    """Machine report with timing fields removed (for determinism comparisons)."""
    doc = json.loads(text)
    for c in doc["checks"]:
        c.pop("time_ms", None)
    return json.dumps(doc, indent=2) + "\n"


__all__ = [
    "CheckResult",
    "Report",
    "emit_report",
    "emit_human",
    "emit_machine",
    "to_machine",
    "parse_machine",
    "strip_timing",
]

"""Line-oriented scenario files.

Grammar (one directive per line, ``#`` starts a comment)::

    algebra gl N | so3 | poincare2 | abelian D | file PATH
    pairing symtrace n=N | file PATH
    dim M
    degree D
    seed S
    connection NAME random [degree=D] [terms=K] [density=X]
    connection NAME file PATH
    connection NAME zero
    suite NAME [NAME ...]
    descent p=0,1,2
    samples N
    inject corrupt-curvature
"""
from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .algebra import (
    AlgebraFormatError,
    DifferentialCrossedModule,
    InvariantPolynomial,
    LieAlgebra,
    build_adjoint_module,
    build_poincare2,
    invpoly_from_trace,
    load_crossed_module,
    parse_pairing,
)
from .exact import Poly, VarRegistry
from .forms import BiGradedForm
from .gauge import TwoConnection, random_connection

__all__ = [
    "ScenarioError",
    "ConnectionSpec",
    "Scenario",
    "SUITES",
    "parse_scenario",
    "load_scenario",
    "default_scenario_text",
    "build_algebra",
    "build_pairing",
    "materialize_connections",
    "parse_connection_file",
]

SUITES = (
    "validate",
    "bianchi",
    "closedness",
    "gauge",
    "chern-weil",
    "chsas",
    "triangle",
    "descent",
    "cartan",
    "graded-relations",
    "stokes-selfcal",
)
ALGEBRAS = ("gl", "so3", "poincare2", "abelian", "file")


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class ConnectionSpec:
    name: str
    kind: str  # random | file | zero
    degree: int | None = None
    terms: int = 2
    density: float = 1.0
    path: str | None = None


@dataclass(frozen=True)
class Scenario:
    algebra: tuple = ("gl", "2")
    pairing: tuple = ("symtrace", 1)
    dim: int = 5
    degree: int = 2
    seed: int | None = None
    connections: tuple[ConnectionSpec, ...] = ()
    suites: tuple[str, ...] = ("all",)
    descent_p: tuple[int, ...] = (0, 1, 2)
    samples: int | None = None
    inject: tuple[str, ...] = ()
    base_dir: str = "."
    warnings: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.pairing[1]

    @property
    def low_dimension(self) -> bool:
        return self.dim < 2 * self.n + 3

    def needs_seed(self) -> bool:
        return any(c.kind == "random" for c in self.connections)

    def selected_suites(self) -> tuple[str, ...]:
        out = []
        for s in self.suites:
            for name in SUITES if s == "all" else (s,):
                if name not in out:
                    out.append(name)
        return tuple(out)

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "n" in kw:
            n = kw.pop("n")
            kw["pairing"] = (self.pairing[0], n) if self.pairing[0] == "symtrace" else self.pairing
        out = replace(self, **kw)
        return _finish(out, None)

    def canonical(self) -> str:
        """Stable text form used for hashing."""
        lines = [
            "algebra " + " ".join(str(a) for a in self.algebra),
            f"pairing {self.pairing[0]} n={self.pairing[1]}" + (f" {self.pairing[2]}" if len(self.pairing) > 2 else ""),
            f"dim {self.dim}",
            f"degree {self.degree}",
            f"seed {self.seed}",
            f"samples {self.samples}",
        ]
        for c in self.connections:
            lines.append(f"connection {c.name} {c.kind} degree={c.degree} terms={c.terms} density={c.density} path={c.path}")
        lines.append("suite " + " ".join(self.selected_suites()))
        lines.append("descent p=" + ",".join(map(str, self.descent_p)))
        lines.append("inject " + " ".join(self.inject))
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_KV = re.compile(r"^([A-Za-z_]+)=(.+)$")


def _col(raw: str, token_index: int) -> int:
    """1-based column of the ``token_index``-th whitespace token in ``raw``."""
    pos = 0
    for i, m in enumerate(re.finditer(r"\S+", raw)):
        if i == token_index:
            return m.start() + 1
        pos = m.end() + 1
    return pos + 1


def _int(tok: str, lineno: int, col: int, what: str, low: int | None = None) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ScenarioError(f"{what} must be an integer, got {tok!r}", lineno, col) from None
    if low is not None and v < low:
        raise ScenarioError(f"{what} must be >= {low}", lineno, col)
    return v


def parse_scenario(text: str, base_dir: str | Path = ".") -> Scenario:
    fields: dict = {"connections": [], "suites": [], "inject": []}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        toks = line.split()
        if not toks:
            continue
        key, args = toks[0], toks[1:]
        col = lambda i: _col(raw, i)  # noqa: E731
        if key in ("algebra", "pairing", "dim", "degree", "seed", "descent", "samples") and key in seen:
            raise ScenarioError(f"duplicate '{key}' directive (first on line {seen[key]})", lineno, col(0))
        seen.setdefault(key, lineno)
        if key == "algebra":
            if not args:
                raise ScenarioError("algebra name expected", lineno, len(raw.rstrip()) + 1)
            name = args[0]
            if name not in ALGEBRAS:
                raise ScenarioError(f"unknown algebra {name!r} (expected one of {', '.join(ALGEBRAS)})", lineno, col(1))
            if name in ("gl", "abelian"):
                if len(args) != 2:
                    raise ScenarioError(f"algebra {name} takes one integer argument", lineno, col(1))
                _int(args[1], lineno, col(2), "algebra size", 1)
            elif name == "file":
                if len(args) != 2:
                    raise ScenarioError("algebra file takes one path", lineno, col(1))
            elif len(args) != 1:
                raise ScenarioError(f"algebra {name} takes no arguments", lineno, col(2))
            fields["algebra"] = tuple(args)
        elif key == "pairing":
            if not args or args[0] not in ("symtrace", "file"):
                raise ScenarioError("pairing must be 'symtrace n=N' or 'file PATH'", lineno, col(1))
            if args[0] == "symtrace":
                m = _KV.match(args[1]) if len(args) == 2 else None
                if not m or m.group(1) != "n":
                    raise ScenarioError("expected n=<arity>", lineno, col(2) if len(args) > 1 else col(1))
                fields["pairing"] = ("symtrace", _int(m.group(2), lineno, col(2), "arity", 1))
            else:
                if len(args) != 2:
                    raise ScenarioError("pairing file takes one path", lineno, col(1))
                fields["pairing_file"] = (args[1], lineno, col(2))
        elif key in ("dim", "degree", "seed", "samples"):
            if len(args) != 1:
                raise ScenarioError(f"'{key}' takes exactly one integer", lineno, col(1) if args else len(raw.rstrip()) + 1)
            fields[key] = _int(args[0], lineno, col(1), key, {"dim": 1, "degree": 0, "seed": 0, "samples": 1}[key])
        elif key == "connection":
            fields["connections"].append(_parse_connection(args, lineno, col))
        elif key == "suite":
            if not args:
                raise ScenarioError("suite name expected", lineno, len(raw.rstrip()) + 1)
            for i, s in enumerate(args):
                if s != "all" and s not in SUITES:
                    raise ScenarioError(f"unknown suite {s!r}", lineno, col(i + 1))
                fields["suites"].append(s)
        elif key == "descent":
            m = _KV.match(args[0]) if len(args) == 1 else None
            if not m or m.group(1) != "p":
                raise ScenarioError("expected p=<list>", lineno, col(1))
            fields["descent_p"] = tuple(
                _int(v, lineno, col(1), "descent p", 0) for v in m.group(2).split(",")
            )
        elif key == "inject":
            if args != ["corrupt-curvature"]:
                raise ScenarioError("only 'inject corrupt-curvature' is supported", lineno, col(1))
            fields["inject"].append(args[0])
        else:
            raise ScenarioError(f"unknown directive {key!r}", lineno, col(0))

    names = [c.name for c in fields["connections"]]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ScenarioError(f"connection names repeated: {', '.join(sorted(dup))}")
    pairing = fields.get("pairing", ("symtrace", 1))
    if "pairing_file" in fields:
        path, lineno, col = fields["pairing_file"]
        pairing = ("file", None, path)
        fields["_pairing_pos"] = (lineno, col)
    sc = Scenario(
        algebra=fields.get("algebra", ("gl", "2")),
        pairing=pairing,
        dim=fields.get("dim", 5),
        degree=fields.get("degree", 2),
        seed=fields.get("seed"),
        connections=tuple(fields["connections"]),
        suites=tuple(fields["suites"]) or ("all",),
        descent_p=fields.get("descent_p", (0, 1, 2)),
        samples=fields.get("samples"),
        inject=tuple(fields["inject"]),
        base_dir=str(base_dir),
    )
    return _finish(sc, fields.get("_pairing_pos"))


def _parse_connection(args, lineno, col) -> ConnectionSpec:
    if len(args) < 2:
        raise ScenarioError("expected: connection NAME random|file|zero ...", lineno, col(1))
    name, kind, rest = args[0], args[1], args[2:]
    if not re.match(r"^[A-Za-z_][A-Za-z_0-9]*$", name):
        raise ScenarioError(f"invalid connection name {name!r}", lineno, col(1))
    if kind == "zero":
        if rest:
            raise ScenarioError("zero connection takes no options", lineno, col(3))
        return ConnectionSpec(name, "zero")
    if kind == "file":
        if len(rest) != 1:
            raise ScenarioError("connection file takes one path", lineno, col(3) if rest else col(2))
        return ConnectionSpec(name, "file", path=rest[0])
    if kind != "random":
        raise ScenarioError(f"unknown connection kind {kind!r}", lineno, col(2))
    opts = {}
    for i, tok in enumerate(rest):
        m = _KV.match(tok)
        if not m or m.group(1) not in ("degree", "terms", "density"):
            raise ScenarioError(f"unknown option {tok!r} (degree=, terms=, density=)", lineno, col(3 + i))
        k, v = m.groups()
        if k == "density":
            try:
                d = float(Fraction(v))
            except (ValueError, ZeroDivisionError):
                raise ScenarioError("density must be a number", lineno, col(3 + i)) from None
            if not 0 < d <= 1:
                raise ScenarioError("density must lie in (0, 1]", lineno, col(3 + i))
            opts[k] = d
        else:
            opts[k] = _int(v, lineno, col(3 + i), k, 0 if k == "degree" else 1)
    return ConnectionSpec(name, "random", degree=opts.get("degree"), terms=opts.get("terms", 2), density=opts.get("density", 1.0))


def _finish(sc: Scenario, pairing_pos) -> Scenario:
    if sc.needs_seed() and sc.seed is None:
        raise ScenarioError("seed required: the scenario declares random connections")
    warnings = []
    if sc.pairing[1] is not None and sc.low_dimension:
        warnings.append(
            f"dim {sc.dim} < 2n+3 = {2 * sc.n + 3}: top invariant forms vanish identically"
        )
    if sc.dim + 3 > 15:
        raise ScenarioError(f"dim {sc.dim} too large (at most 12 spacetime variables)")
    bad_p = [p for p in sc.descent_p if p > 2 * (sc.n or 1) + 3]
    if bad_p:
        raise ScenarioError(f"descent p values {bad_p} exceed 2n+3")
    return replace(sc, warnings=tuple(warnings))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_scenario(text, base_dir=path.parent)


def default_scenario_text(name: str = "default") -> str:
    return resources.files("hgauge").joinpath("data", f"{name}.scn").read_text(encoding="utf-8")


# ----------------------------------------------------------------------------
# resolution


def _resolve(sc: Scenario, rel: str) -> Path:
    p = Path(rel)
    if p.is_absolute() or p.exists():
        return p
    cand = Path(sc.base_dir) / p
    if cand.exists():
        return cand
    packaged = resources.files("hgauge").joinpath("data", rel)
    if packaged.is_file():
        return Path(str(packaged))
    raise ScenarioError(f"file not found: {rel}")


def build_algebra(sc: Scenario) -> DifferentialCrossedModule:
    name, *args = sc.algebra
    if name == "gl":
        return build_adjoint_module(LieAlgebra.gl(int(args[0])))
    if name == "so3":
        return build_adjoint_module(LieAlgebra.so3())
    if name == "abelian":
        return build_adjoint_module(LieAlgebra.abelian(int(args[0])))
    if name == "poincare2":
        return build_poincare2()
    if name == "file":
        try:
            return load_crossed_module(_resolve(sc, args[0]))
        except AlgebraFormatError as exc:
            raise ScenarioError(f"{args[0]}: {exc}") from None
    raise ScenarioError(f"unknown algebra {name!r}")


def build_pairing(sc: Scenario, cm: DifferentialCrossedModule) -> InvariantPolynomial:
    if sc.pairing[0] == "symtrace":
        if cm.g.rep is None:
            raise ScenarioError("symtrace pairing needs a matrix representation of g")
        return invpoly_from_trace(cm, sc.pairing[1])
    path = _resolve(sc, sc.pairing[2])
    try:
        return parse_pairing(path.read_text(encoding="utf-8"), cm)
    except AlgebraFormatError as exc:
        raise ScenarioError(f"{sc.pairing[2]}: {exc}") from None


def connection_rng(seed: int, name: str) -> random.Random:
    return random.Random(f"hgauge:{seed}:{name}")


def parse_connection_file(text: str, cm: DifferentialCrossedModule, reg: VarRegistry) -> TwoConnection:
    """Lines ``A <g-gen> i <poly>`` and ``B <h-gen> i j <poly>`` (1-based dx indices)."""
    acomp: dict = {}
    bcomp: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split(None, 4 if line.startswith("B") else 3)
        try:
            if toks[0] == "A" and len(toks) == 4:
                a = cm.g.index(toks[1])
                key = ((int(toks[2]) - 1,), ())
                vec = acomp.setdefault(key, [Poly.zero(reg)] * cm.g.dim)
                vec = list(vec)
                vec[a] = vec[a] + Poly.parse(reg, toks[3])
                acomp[key] = vec
            elif toks[0] == "B" and len(toks) == 5:
                i, j = int(toks[2]) - 1, int(toks[3]) - 1
                b = cm.h.index(toks[1])
                sign = 1
                if i > j:
                    i, j, sign = j, i, -1
                if i == j:
                    raise ValueError("repeated dx index")
                key = ((i, j), ())
                vec = list(bcomp.setdefault(key, [Poly.zero(reg)] * cm.h.dim))
                vec[b] = vec[b] + Poly.parse(reg, toks[4]) * sign
                bcomp[key] = vec
            else:
                raise ValueError("expected 'A gen i poly' or 'B gen i j poly'")
        except (ValueError, KeyError) as exc:
            msg = exc.args[0] if exc.args else str(exc)
            raise ScenarioError(str(msg), lineno, 1) from None
    try:
        A = BiGradedForm.from_components(reg, "g", cm.g.dim, acomp)
        B = BiGradedForm.from_components(reg, "h", cm.h.dim, bcomp)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return TwoConnection(A, B)


def materialize_connections(sc: Scenario, cm, reg: VarRegistry, count: int | None = None) -> dict[str, TwoConnection]:
    """Concrete connections, padded with seeded auxiliaries up to ``count``."""
    out: dict[str, TwoConnection] = {}
    for spec in sc.connections:
        if spec.kind == "zero":
            out[spec.name] = TwoConnection.zero(cm, reg)
        elif spec.kind == "file":
            out[spec.name] = parse_connection_file(_resolve(sc, spec.path).read_text(encoding="utf-8"), cm, reg)
        else:
            deg = sc.degree if spec.degree is None else spec.degree
            out[spec.name] = random_connection(cm, reg, deg, connection_rng(sc.seed, spec.name), spec.terms, spec.density)
    i = 0
    while count is not None and len(out) < count:
        if sc.seed is None:
            break
        i += 1
        name = f"aux{i}"
        if name not in out:
            out[name] = random_connection(cm, reg, sc.degree, connection_rng(sc.seed, name))
    return out

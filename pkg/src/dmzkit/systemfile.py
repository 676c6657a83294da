"""Plain-text system files for the command line tools.

INI-style sections hold one mathematical object per file.  Every
expression value is double-quoted; indexed keys use brackets, so
``Gamma[1][2][2]`` is the coefficient with lower indices (1, 2) and
upper index 2, ``f[1][2]`` a semilinear right-hand side, ``A[2][3]`` a
wave-matrix entry, and ``v[1]``/``w[1]`` hydrodynamic components.
Vector fields are comma-separated lists of quoted components, one per
chart coordinate.

    [system]
    version = 1
    kind = dmz
    coordinates = x, y, z
    functions = h:x, k:y

    [coefficients]
    Gamma[1][2][1] = "(x - z)/((x - y)*(y - z))"
    C[1][2] = "0"

    [metadata]
    expect = pass
    check = check-involutive

Section layout by kind: dmz uses [coefficients]; gdmz uses [equations]
with an optional ``dependent`` name in [system]; wave uses [entries];
hydro uses [velocities] and optionally [flow]; distribution uses
[fields]; jetquotient uses [parts] (keys X[i], V[i]) plus
[construction] with ``invariant``, optional ``dependent``, and one
``inverse[name]`` entry per chart coordinate that must be rewritten.
[metadata] is free-form; ``expect``/``check`` drive the corpus runner.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from dmzkit import expr as E
from dmzkit import geometry as G
from dmzkit.dmz import DmzSystem, GdmzSystem
from dmzkit.hydro import FlowField, HydroSystem
from dmzkit.waves import WaveMatrix

KINDS = ("dmz", "gdmz", "wave", "hydro", "distribution", "jetquotient")

_INDEXED = re.compile(r"^([A-Za-z]+)((?:\[\d+\])+)$")


class SystemFileError(ValueError):
    pass


def _unquote(raw: str, where: str) -> str:
    raw = raw.strip()
    if len(raw) < 2 or raw[0] != '"' or raw[-1] != '"':
        raise SystemFileError(f"{where}: expression must be double-quoted")
    return raw[1:-1]


def _split_indexed(key: str, where: str):
    m = _INDEXED.match(key)
    if not m:
        raise SystemFileError(f"{where}: malformed indexed key {key!r}")
    name = m.group(1)
    indices = tuple(int(p) for p in re.findall(r"\[(\d+)\]", m.group(2)))
    return name, indices


@dataclass
class SystemFile:
    path: str
    kind: str
    version: int
    coordinates: tuple
    functions: tuple = ()
    metadata: dict = field(default_factory=dict)
    _config: configparser.ConfigParser = None

    @property
    def opaque_names(self):
        return tuple(nm for nm, _ in self.functions)

    def expr(self, raw: str, where: str) -> E.Expr:
        text = _unquote(raw, where)
        try:
            e = E.parse(text, opaque=self.opaque_names)
        except E.ExprError as exc:
            raise SystemFileError(f"{where}: {exc}") from exc
        bad = set(E.variables(e)) - set(self.coordinates)
        if bad:
            raise SystemFileError(
                f"{where}: undeclared variables {sorted(bad)}")
        return e

    def _section(self, name: str, required: bool = True):
        if not self._config.has_section(name):
            if required:
                raise SystemFileError(f"{self.path}: missing [{name}] section")
            return {}
        return dict(self._config.items(name))

    def _expect_kind(self, *kinds):
        if self.kind not in kinds:
            raise SystemFileError(
                f"{self.path}: kind {self.kind!r} does not support this "
                f"reading (expected {' or '.join(kinds)})")

    # -- typed readers ------------------------------------------------

    def dmz(self) -> DmzSystem:
        self._expect_kind("dmz")
        S = DmzSystem(self.coordinates)
        for key, raw in self._section("coefficients").items():
            where = f"{self.path}: {key}"
            name, idx = _split_indexed(key, where)
            if name == "Gamma" and len(idx) == 3:
                S.set_gamma(idx[0], idx[1], idx[2], self.expr(raw, where))
            elif name == "C" and len(idx) == 2:
                S.set_c(idx[0], idx[1], self.expr(raw, where))
            else:
                raise SystemFileError(
                    f"{where}: expected Gamma[i][j][k] or C[i][j]")
        return S

    def gdmz(self) -> GdmzSystem:
        self._expect_kind("gdmz")
        dep = self._config.get("system", "dependent", fallback="u").strip()
        Gs = GdmzSystem(self.coordinates, dep=dep)
        gradients = [f"{dep}{i}" for i in range(1, len(self.coordinates) + 1)]
        scope = SystemFile(self.path, self.kind, self.version,
                           self.coordinates + (dep, *gradients),
                           self.functions, self.metadata, self._config)
        for key, raw in self._section("equations").items():
            where = f"{self.path}: {key}"
            name, idx = _split_indexed(key, where)
            if name != "f" or len(idx) != 2:
                raise SystemFileError(f"{where}: expected f[i][j]")
            Gs.set_f(idx[0], idx[1], scope.expr(raw, where))
        return Gs

    def wave(self) -> WaveMatrix:
        self._expect_kind("wave")
        A = WaveMatrix(self.coordinates)
        for key, raw in self._section("entries").items():
            where = f"{self.path}: {key}"
            name, idx = _split_indexed(key, where)
            if name != "A" or len(idx) != 2:
                raise SystemFileError(f"{where}: expected A[i][j]")
            A.set_entry(idx[0], idx[1], self.expr(raw, where))
        return A

    def hydro(self) -> HydroSystem:
        self._expect_kind("hydro")
        vals = self._indexed_list("velocities", "v")
        return HydroSystem(self.coordinates, vals)

    def flow(self, required: bool = True):
        self._expect_kind("hydro")
        if not self._config.has_section("flow"):
            if required:
                raise SystemFileError(f"{self.path}: missing [flow] section")
            return None
        return FlowField(self.coordinates, self._indexed_list("flow", "w"))

    def _indexed_list(self, section: str, letter: str):
        entries = {}
        for key, raw in self._section(section).items():
            where = f"{self.path}: {key}"
            name, idx = _split_indexed(key, where)
            if name != letter or len(idx) != 1:
                raise SystemFileError(f"{where}: expected {letter}[i]")
            entries[idx[0]] = self.expr(raw, where)
        n = len(self.coordinates)
        if sorted(entries) != list(range(1, n + 1)):
            raise SystemFileError(
                f"{self.path}: [{section}] needs {letter}[1]..{letter}[{n}]")
        return [entries[i] for i in range(1, n + 1)]

    def _field(self, chart: G.Chart, raw: str, where: str) -> G.VectorField:
        pieces = [p for p in raw.split(",")]
        if len(pieces) != chart.dim:
            raise SystemFileError(
                f"{where}: {len(pieces)} components for a "
                f"{chart.dim}-coordinate chart")
        comps = [self.expr(p, where) for p in pieces]
        return G.VectorField(chart, comps)

    def distribution(self):
        self._expect_kind("distribution")
        chart = G.Chart(self.coordinates)
        fields = []
        for key, raw in self._section("fields").items():
            fields.append(self._field(chart, raw, f"{self.path}: {key}"))
        if not fields:
            raise SystemFileError(f"{self.path}: [fields] is empty")
        return G.Distribution(chart, fields)

    def jetquotient(self):
        self._expect_kind("jetquotient")
        chart = G.Chart(self.coordinates)
        pairs = {}
        for key, raw in self._section("parts").items():
            where = f"{self.path}: {key}"
            name, idx = _split_indexed(key, where)
            if name not in ("X", "V") or len(idx) != 1:
                raise SystemFileError(f"{where}: expected X[i] or V[i]")
            pairs.setdefault(idx[0], {})[name] = self._field(chart, raw, where)
        parts = []
        for i in sorted(pairs):
            if sorted(pairs[i]) != ["V", "X"]:
                raise SystemFileError(
                    f"{self.path}: part {i} needs both X[{i}] and V[{i}]")
            parts.append([pairs[i]["X"], pairs[i]["V"]])
        if sorted(pairs) != list(range(1, len(pairs) + 1)):
            raise SystemFileError(f"{self.path}: parts must be numbered 1..n")
        cons = self._section("construction")
        if "invariant" not in cons:
            raise SystemFileError(
                f"{self.path}: [construction] needs an invariant")
        invariant = self.expr(cons["invariant"], f"{self.path}: invariant")
        dep = cons.get("dependent", "u").strip()
        gradients = [f"{dep}{i}" for i in range(1, len(parts) + 1)]
        scope = SystemFile(self.path, self.kind, self.version,
                           self.coordinates + (dep, *gradients),
                           self.functions, self.metadata, self._config)
        inverse = {}
        for key, raw in cons.items():
            if key in ("invariant", "dependent"):
                continue
            m = re.match(r"^inverse\[([A-Za-z][A-Za-z0-9_]*)\]$", key)
            if not m:
                raise SystemFileError(
                    f"{self.path}: unexpected construction key {key!r}")
            name = m.group(1)
            if name not in chart.names:
                raise SystemFileError(
                    f"{self.path}: inverse[{name}] names no chart coordinate")
            inverse[name] = scope.expr(raw, f"{self.path}: inverse[{name}]")
        return chart, parts, invariant, inverse, dep


def _coordinate_list(raw: str, path: str):
    names = [c.strip() for c in raw.split(",") if c.strip()]
    if not names:
        raise SystemFileError(f"{path}: empty coordinate list")
    for nm in names:
        try:
            E.var(nm)
        except E.ExprError as exc:
            raise SystemFileError(f"{path}: bad coordinate {nm!r}") from exc
    if len(set(names)) != len(names):
        raise SystemFileError(f"{path}: repeated coordinate name")
    return tuple(names)


def load(path: str) -> SystemFile:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh, source=path)
    except OSError as exc:
        raise SystemFileError(f"{path}: {exc.strerror or exc}") from exc
    except configparser.Error as exc:
        raise SystemFileError(f"{path}: {exc}") from exc
    if not cp.has_section("system"):
        raise SystemFileError(f"{path}: missing [system] section")
    kind = cp.get("system", "kind", fallback="").strip()
    if kind not in KINDS:
        raise SystemFileError(
            f"{path}: unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    try:
        version = cp.getint("system", "version", fallback=1)
    except ValueError as exc:
        raise SystemFileError(f"{path}: bad version") from exc
    if version != 1:
        raise SystemFileError(f"{path}: unsupported format version {version}")
    coords = _coordinate_list(cp.get("system", "coordinates", fallback=""), path)
    functions = []
    raw_funcs = cp.get("system", "functions", fallback="").strip()
    if raw_funcs:
        for piece in raw_funcs.split(","):
            piece = piece.strip()
            if not piece:
                continue
            name, _, var = piece.partition(":")
            name = name.strip()
            var = var.strip() or None
            if var is not None and var not in coords:
                raise SystemFileError(
                    f"{path}: function {name} bound to undeclared {var!r}")
            functions.append((name, var))
    metadata = dict(cp.items("metadata")) if cp.has_section("metadata") else {}
    return SystemFile(path=path, kind=kind, version=version,
                      coordinates=coords, functions=tuple(functions),
                      metadata=metadata, _config=cp)


# ---------------------------------------------------------------------------
# Rendering (for `gauge` and `construct` output)


def render_dmz(S: DmzSystem, metadata: dict | None = None) -> str:
    lines = ["[system]", "version = 1", "kind = dmz",
             f"coordinates = {', '.join(S.coords)}", "", "[coefficients]"]
    for (i, j, k) in sorted(S._gamma):
        lines.append(f"Gamma[{i}][{j}][{k}] = \"{E.render(S.gamma3(i, j, k))}\"")
    for (i, j) in sorted(S._c):
        lines.append(f"C[{i}][{j}] = \"{E.render(S.c2(i, j))}\"")
    if metadata:
        lines += ["", "[metadata]"]
        lines += [f"{k} = {v}" for k, v in sorted(metadata.items())]
    return "\n".join(lines) + "\n"


def render_gdmz(Gs: GdmzSystem, metadata: dict | None = None) -> str:
    lines = ["[system]", "version = 1", "kind = gdmz",
             f"coordinates = {', '.join(Gs.coords)}",
             f"dependent = {Gs.dep}", "", "[equations]"]
    for (i, j) in Gs.pairs():
        lines.append(f"f[{i}][{j}] = \"{E.render(Gs.f(i, j))}\"")
    if metadata:
        lines += ["", "[metadata]"]
        lines += [f"{k} = {v}" for k, v in sorted(metadata.items())]
    return "\n".join(lines) + "\n"

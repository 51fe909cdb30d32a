"""Loader for ``.geo`` geometry files (TOML).

Layout::

    name = "flat2d"
    signature = "++"                    # or [p, q]

    [chart.plane]
    coords = ["x", "y"]
    box = [[-1, 1], [-1, 1]]

    [coframe]                           # rows of components per chart
    plane = [["1", "0"], ["0", "1"]]

    [metric]                            # optional, same layout as coframe
    [vectorfield.rot]                   # components per chart
    plane = ["-y", "x"]

    [gauge.ns]                          # coordinate and frame transition
    src = "north"; dst = "south"
    map = ["u/(u^2+v^2)", "-v/(u^2+v^2)"]
    matrix = [[...], [...]]             # e_dst = matrix . e_src
    box = [[0.4, 1.5], [0.3, 1.2]]

    [spinor.psi]                        # (re, im) pairs per chart
    plane = [["x", "0"], ["y", "x*y"]]

    [kk]
    chart = "main"; base = ["th", "ph"]; fundamental = ["dpsi"]
    periods = [12.566370614359172]; quadrature_box = [[0, 3.14159], [0, 6.28318]]

    [tolerances]                        # per-check overrides
    [expect]                            # inline verdicts, see checks.py
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import exprlang
from .frames import Coframe, Metric, Signature
from .geometry import (Atlas, Chart, FormField, GaugeTransition, GeometryError, Overlap,
                       VectorField)
from .kk import KKSetup
from .spinor import SpinorField

__all__ = ["GeometrySpec", "SpecError", "load_spec", "loads_spec", "fixture_path", "FIXTURES"]

FIXTURES = ("flat2d", "flat4d", "s2", "s3_hopf", "schwarzschild", "product_s2xs1", "warped")
_TOP_KEYS = {"name", "description", "signature", "chart", "coframe", "metric", "vectorfield",
             "gauge", "spinor", "kk", "tolerances", "expect"}


class SpecError(Exception):
    """Invalid geometry file; ``diagnostics`` lists ``(line, message)`` pairs."""

    def __init__(self, diagnostics, path=None):
        self.diagnostics = list(diagnostics)
        self.path = path
        where = f"{path}: " if path else ""
        lines = [f"{where}line {ln}: {msg}" if ln else f"{where}{msg}"
                 for ln, msg in self.diagnostics]
        super().__init__("\n".join(lines))


@dataclass
class GeometrySpec:
    name: str
    atlas: Atlas
    signature: Signature
    coframe: Coframe | None
    metric: dict
    vectorfields: dict
    gauges: dict
    spinors: dict
    kk: KKSetup | None
    tolerances: dict
    expect: dict
    raw: dict = field(repr=False, default_factory=dict)
    path: str | None = None

    @property
    def charts(self) -> dict:
        return self.atlas.charts

    @property
    def main_chart(self) -> Chart:
        return next(iter(self.atlas.charts.values()))

    @property
    def eta(self) -> np.ndarray:
        return self.signature.eta

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))


def fixture_path(name: str) -> Path:
    base = Path(__file__).resolve().parent / "fixtures"
    p = base / (name if name.endswith(".geo") else f"{name}.geo")
    if not p.exists():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return p


def load_spec(path) -> GeometrySpec:
    p = Path(path)
    if not p.exists() and not p.suffix:
        try:
            p = fixture_path(str(path))
        except FileNotFoundError:
            pass
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError([(None, f"cannot read file: {exc.strerror or exc}")], str(path)) from exc
    return loads_spec(text, str(p))


class _Diag:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.items = []

    def line_of(self, needle: str | None, header: str | None = None):
        """Best-effort line number of a value (or of a section header)."""
        start = 0
        if header is not None:
            pat = re.compile(r"^\s*\[\s*" + re.escape(header) + r"\s*\]")
            for i, ln in enumerate(self.lines):
                if pat.match(ln):
                    start = i
                    if needle is None:
                        return i + 1
                    break
        if needle is not None:
            for i in range(start, len(self.lines)):
                if needle in self.lines[i]:
                    return i + 1
            for i, ln in enumerate(self.lines):
                if needle in ln:
                    return i + 1
        return None

    def add(self, line, msg):
        self.items.append((line, msg))


def loads_spec(text: str, path: str | None = None) -> GeometrySpec:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise SpecError([(int(m.group(1)) if m else None, f"syntax error: {exc}")], path) from exc
    d = _Diag(text)
    spec = _build(raw, d)
    if d.items:
        raise SpecError(d.items, path)
    spec.path = path
    return spec


def _parse_rows(chart: Chart, rows, d: _Diag, block: str, shape=None):
    """Validate and parse a matrix (or vector) of expressions."""
    if shape is not None:
        arr = np.asarray(rows, dtype=object)
        if arr.shape != shape:
            d.add(d.line_of(None, block),
                  f"[{block}] expects a {'x'.join(map(str, shape))} array for chart "
                  f"{chart.name!r}, got shape {arr.shape}")
            return None
    ok = True

    def walk(x):
        nonlocal ok
        if isinstance(x, (list, tuple)):
            return [walk(y) for y in x]
        try:
            return chart.parse(x)
        except exprlang.ExpressionError as exc:
            ok = False
            s = str(x)
            off = getattr(exc, "offset", None)
            loc = f" (offset {off})" if off is not None else ""
            d.add(d.line_of(s, block), f"[{block}] chart {chart.name!r}: {exc}{loc} in {s!r}")
            return None

    out = walk(rows)
    return out if ok else None


def _build(raw: dict, d: _Diag) -> GeometrySpec:
    for k in raw:
        if k not in _TOP_KEYS:
            d.add(d.line_of(k), f"unknown top-level key {k!r}")
    name = str(raw.get("name", "unnamed"))
    try:
        sig = Signature.parse(raw.get("signature", ""))
    except (ValueError, TypeError) as exc:
        d.add(d.line_of("signature"), f"bad signature: {exc}")
        sig = None

    atlas = Atlas()
    for cname, cdef in raw.get("chart", {}).items():
        try:
            atlas.add_chart(Chart(cname, tuple(cdef["coords"]), tuple(map(tuple, cdef["box"]))))
        except (KeyError, TypeError, ValueError, GeometryError) as exc:
            d.add(d.line_of(None, f"chart.{cname}"), f"[chart.{cname}] invalid: {exc}")
    if not atlas.charts:
        d.add(None, "no charts declared")
        raise SpecError(d.items)
    dims = {c.dim for c in atlas.charts.values()}
    if len(dims) != 1:
        d.add(None, "charts have different dimensions")
    if sig is not None and sig.dim not in dims:
        d.add(d.line_of("signature"), f"signature dimension {sig.dim} does not match charts")

    def chart_of(cname, block):
        ch = atlas.charts.get(cname)
        if ch is None:
            d.add(d.line_of(cname, block), f"[{block}] refers to unknown chart {cname!r}")
        return ch

    coframe = None
    if "coframe" in raw:
        comps = {}
        for cname, rows in raw["coframe"].items():
            ch = chart_of(cname, "coframe")
            if ch is None:
                continue
            parsed = _parse_rows(ch, rows, d, "coframe", (ch.dim, ch.dim))
            if parsed is not None:
                comps[ch.name] = FormField.one_forms(ch, parsed).components[ch.name]
        if comps and sig is not None:
            n = next(iter(dims))
            coframe = Coframe(FormField(1, "vector", (n,), comps), sig)

    metric = {}
    for cname, rows in raw.get("metric", {}).items():
        ch = chart_of(cname, "metric")
        if ch is None:
            continue
        parsed = _parse_rows(ch, rows, d, "metric", (ch.dim, ch.dim))
        if parsed is not None:
            metric[cname] = Metric.from_rows(ch, parsed)
    if coframe is None and not metric:
        d.add(None, "a [coframe] or [metric] block is required")

    vfs = {}
    for vname, vdef in raw.get("vectorfield", {}).items():
        comps = {}
        for cname, row in vdef.items():
            ch = chart_of(cname, f"vectorfield.{vname}")
            if ch is None:
                continue
            parsed = _parse_rows(ch, row, d, f"vectorfield.{vname}", (ch.dim,))
            if parsed is not None:
                comps[cname] = tuple(parsed)
        vfs[vname] = VectorField(comps)

    gauges = {}
    for gname, gdef in raw.get("gauge", {}).items():
        block = f"gauge.{gname}"
        try:
            src = atlas.charts[gdef["src"]]
            dst = atlas.charts[gdef["dst"]]
        except KeyError as exc:
            d.add(d.line_of(None, block), f"[{block}] needs known 'src' and 'dst' charts ({exc})")
            continue
        tmap = _parse_rows(src, gdef.get("map", list(dst.coords)), d, block, (dst.dim,))
        matrix = gdef.get("matrix")
        gt = None
        if matrix is not None:
            N = sig.dim if sig is not None else src.dim
            m = _parse_rows(src, matrix, d, block, (N, N))
            if m is not None:
                gt = GaugeTransition.from_strings(src, m)
        box = gdef.get("box", src.box)
        if tmap is not None:
            try:
                ov = Overlap(src, dst, tuple(tmap), tuple(map(tuple, box)), gt)
                atlas.add_overlap(ov)
                gauges[gname] = ov
            except (TypeError, ValueError) as exc:
                d.add(d.line_of(None, block), f"[{block}] invalid: {exc}")

    spinors = {}
    for sname, sdef in raw.get("spinor", {}).items():
        comps = {}
        for cname, pairs in sdef.items():
            ch = chart_of(cname, f"spinor.{sname}")
            if ch is None:
                continue
            norm = [p if isinstance(p, (list, tuple)) else [p, "0"] for p in pairs]
            parsed = _parse_rows(ch, norm, d, f"spinor.{sname}", (len(norm), 2))
            if parsed is not None:
                comps.update(SpinorField.from_strings(ch, parsed).components)
        spinors[sname] = SpinorField(comps)

    kk = None
    if "kk" in raw:
        kd = raw["kk"]
        ch = chart_of(kd.get("chart", next(iter(atlas.charts))), "kk")
        if ch is not None:
            fund = []
            for fname in kd.get("fundamental", []):
                if fname not in vfs:
                    d.add(d.line_of(fname, "kk"), f"[kk] unknown vector field {fname!r}")
                elif ch.name not in vfs[fname].components:
                    d.add(d.line_of(fname, "kk"),
                          f"[kk] vector field {fname!r} has no components on chart {ch.name!r}")
                else:
                    fund.append(VectorField({ch.name: vfs[fname].components[ch.name]}))
            base = tuple(kd.get("base", ()))
            bad = [b for b in base if b not in ch.coords]
            if bad:
                d.add(d.line_of(None, "kk"), f"[kk] base coordinates {bad} not in chart")
            if not fund:
                d.add(d.line_of(None, "kk"), "[kk] needs at least one fundamental field")
            if len(base) + len(fund) != ch.dim:
                d.add(d.line_of(None, "kk"), "[kk] base and fiber dimensions do not add up")
            cf = None
            if coframe is not None and ch.name in coframe.field.components:
                cf = Coframe(FormField(1, "vector", coframe.field.vshape,
                                       {ch.name: coframe.field.components[ch.name]}),
                             coframe.signature)
            periods = kd.get("periods")
            qbox = kd.get("quadrature_box")
            kk = KKSetup(ch, fund, base, metric.get(ch.name), cf,
                         tuple(float(p) for p in periods) if periods else None,
                         tuple(map(tuple, qbox)) if qbox else None,
                         dict(kd.get("section", {})))

    tolerances = {str(k): float(v) for k, v in raw.get("tolerances", {}).items()}
    expect = dict(raw.get("expect", {}))
    for vname in expect.get("killing", {}):
        if vname not in vfs:
            d.add(d.line_of(vname, "expect"), f"[expect] killing verdict for unknown field {vname!r}")
    return GeometrySpec(name, atlas, sig if sig is not None else Signature(0, 1), coframe,
                        metric, vfs, gauges, spinors, kk, tolerances, expect, raw)

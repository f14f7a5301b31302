"""Run configuration for the command-line tools.

Configs are INI-style ``key = value`` files with sections, read with
:mod:`configparser`::

    [manifold]
    kind = product
    n = 5
    r = 0.7

    [grids]
    t = 0.5, 1, 2
    eps = logspace(-4, -2, 17)
"""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .manifolds import SPHERE, ModelManifold
from .quadrature import QuadratureSpec
from .reduction import LCF_ALL_DIM, REGIMES

OUTPUT_DIR_ENV = "YAMABE_BUBBLES_OUTPUT_DIR"


def parse_grid(text: str) -> tuple[float, ...]:
    """Comma-separated floats, or ``logspace(a, b, m)`` for m points from 10^a to 10^b."""
    s = text.strip()
    if s.startswith("logspace(") and s.endswith(")"):
        parts = [p.strip() for p in s[len("logspace("):-1].split(",")]
        if len(parts) != 3:
            raise ValueError(f"logspace needs three arguments: {text!r}")
        a, b, m = float(parts[0]), float(parts[1]), int(parts[2])
        if m < 1:
            raise ValueError("logspace needs at least one point")
        return tuple(float(x) for x in np.logspace(a, b, m))
    vals = tuple(float(p) for p in s.split(",") if p.strip())
    if not vals:
        raise ValueError("empty grid")
    return vals


def format_grid(vals: tuple[float, ...]) -> str:
    return ", ".join(repr(float(v)) for v in vals)


@dataclass(frozen=True)
class RunConfig:
    kind: str = SPHERE
    n: int = 3
    r: float | None = None
    regime: str = LCF_ALL_DIM
    t_grid: tuple[float, ...] = (0.5, 1.0, 2.0)
    eps_grid: tuple[float, ...] = field(default_factory=lambda: tuple(float(x) for x in np.logspace(-4, -2, 17)))
    h: float | None = None  # None means geometric h = c_n Scal
    conformal: bool = True
    # quadrature overrides; None keeps each quantity's library default
    rel_tol: float | None = None
    abs_tol: float | None = None
    max_depth: int | None = None
    output_dir: str | None = None

    def __post_init__(self):
        self.manifold()  # raises the library's domain errors
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if any(t <= 0 for t in self.t_grid) or any(e <= 0 for e in self.eps_grid):
            raise ValueError("t and eps grids must be positive")
        if not self.t_grid or not self.eps_grid:
            raise ValueError("grids must be nonempty")
        self.quadrature()
        if not self.conformal and self.kind != SPHERE:
            raise ValueError("the Lambda = 1 mode is only offered on the round sphere")

    def manifold(self) -> ModelManifold:
        return ModelManifold(self.kind, self.n, self.r)

    def quadrature(self, base: QuadratureSpec = QuadratureSpec()) -> QuadratureSpec | None:
        """``base`` with the configured overrides, or None when nothing is overridden."""
        kw = {k: v for k, v in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol),
                                ("max_depth", self.max_depth)) if v is not None}
        return replace(base, **kw) if kw else None

    def resolved_output_dir(self) -> str | None:
        return self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or None

    def with_overrides(self, **kw) -> "RunConfig":
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in kw.items() if k in known and v is not None})

    # -- text form ---------------------------------------------------------

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp["manifold"] = {"kind": self.kind, "n": str(self.n), "r": "" if self.r is None else repr(self.r)}
        cp["ansatz"] = {"regime": self.regime, "h": "geometric" if self.h is None else repr(self.h),
                        "conformal": str(self.conformal).lower()}
        cp["grids"] = {"t": format_grid(self.t_grid), "eps": format_grid(self.eps_grid)}
        cp["quadrature"] = {k: "" if v is None else repr(v) for k, v in
                            (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol), ("max_depth", self.max_depth))}
        cp["output"] = {"dir": self.output_dir or ""}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        kw = {}
        if cp.has_section("manifold"):
            m = cp["manifold"]
            kw["kind"] = m.get("kind", SPHERE).strip()
            kw["n"] = m.getint("n", 3)
            r = m.get("r", "").strip()
            kw["r"] = float(r) if r else None
        if cp.has_section("ansatz"):
            a = cp["ansatz"]
            kw["regime"] = a.get("regime", LCF_ALL_DIM).strip()
            h = a.get("h", "geometric").strip()
            kw["h"] = None if h in ("", "geometric") else float(h)
            kw["conformal"] = a.getboolean("conformal", True)
        if cp.has_section("grids"):
            g = cp["grids"]
            if "t" in g:
                kw["t_grid"] = parse_grid(g["t"])
            if "eps" in g:
                kw["eps_grid"] = parse_grid(g["eps"])
        if cp.has_section("quadrature"):
            q = cp["quadrature"]
            for key, conv in (("rel_tol", float), ("abs_tol", float), ("max_depth", int)):
                v = q.get(key, "").strip()
                kw[key] = conv(v) if v else None
        if cp.has_section("output"):
            kw["output_dir"] = cp["output"].get("dir", "").strip() or None
        return cls(**kw)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

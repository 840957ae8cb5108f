"""Command-line entry point and report serialization.

Exit codes: 0 success, 1 usage error, 2 truncation did not stabilize,
3 internal assertion (candidate space not spanning, cross-check mismatch).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass
from typing import Any, Sequence

from .chiral_algebra import word_label
from .exact_linalg import rat, rat_str
from .hw_modules import (
    ModuleSpec,
    auto_singular_relations,
    gram_matrix,
    heisenberg_module,
    level_basis,
    singular_at_levels,
    virasoro_module,
    with_relations,
)

SCHEMA_VERSION = 1
SUBCOMMANDS = ("singular", "module-basis", "fuse", "dual", "crosscheck")
DEFAULT_AUTO_MAX = 2
ESCALATE = 4

EXIT_OK, EXIT_USAGE, EXIT_UNSTABLE, EXIT_ASSERT = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    algebra: str = "virasoro"
    c: str = "0"
    h1: str = "0"
    h2: str = "0"
    lambda1: str = "0"
    lambda2: str = "0"
    singular_levels: tuple[int, ...] = ()
    auto_singular_max: int | None = None
    depth: int = 0
    w: str = "1"
    lmax: int | None = None
    format: str = "json"
    check_dual: bool = False

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.algebra not in ("virasoro", "heisenberg"):
            raise UsageError(f"unknown algebra {self.algebra!r}")
        for name in ("c", "h1", "h2", "lambda1", "lambda2", "w"):
            try:
                rat(getattr(self, name))
            except (ValueError, ZeroDivisionError) as exc:
                raise UsageError(f"--{name}: {exc}") from None
        if rat(self.w) == 0:
            raise UsageError("w must be nonzero")
        if self.depth < 0:
            raise UsageError("depth must be >= 0")
        if self.lmax is not None and self.lmax < self.depth:
            raise UsageError("lmax must be >= depth")
        if any(n < 1 for n in self.singular_levels):
            raise UsageError("singular levels must be >= 1")
        if self.auto_singular_max is not None and self.auto_singular_max < 0:
            raise UsageError("--auto-singular-max must be >= 0")
        if self.format not in ("json", "text"):
            raise UsageError(f"unknown format {self.format!r}")

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["singular_levels"] = list(self.singular_levels)
        d.pop("format")
        if self.algebra == "heisenberg":
            for k in ("c", "h1", "h2", "singular_levels", "auto_singular_max"):
                d.pop(k)
        else:
            d.pop("lambda1")
            d.pop("lambda2")
        return d


@dataclass(frozen=True)
class ReportDocument:
    subcommand: str
    config: dict
    outputs: dict
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> dict:
        return {"schema_version": self.schema_version, "subcommand": self.subcommand,
                "config": self.config, "outputs": self.outputs}


def emit(r: ReportDocument, fmt: str = "json") -> str:
    """Deterministic serialization: sorted keys, exact rationals as strings."""
    if fmt == "json":
        return json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"
    if fmt == "text":
        lines = [f"{r.subcommand} (schema {r.schema_version})"]
        lines += [f"  {k} = {json.dumps(v, ensure_ascii=False)}" for k, v in sorted(r.config.items())]
        _text_lines(r.outputs, 0, lines)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _text_lines(obj: Any, indent: int, lines: list[str]) -> None:
    pad = "  " * indent
    for k in sorted(obj):
        v = obj[k]
        if isinstance(v, dict) and v:
            lines.append(f"{pad}{k}:")
            _text_lines(v, indent + 1, lines)
        elif _is_matrix(v):
            lines.append(f"{pad}{k}:")
            width = max((len(x) for row in v for x in row), default=1)
            lines += [f"{pad}  [ " + "  ".join(x.rjust(width) for x in row) + " ]" for row in v]
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            lines.append(f"{pad}{k}:")
            for i, item in enumerate(v):
                lines.append(f"{pad}  [{i}]")
                _text_lines(item, indent + 2, lines)
        else:
            lines.append(f"{pad}{k}: {json.dumps(v, ensure_ascii=False)}")


def _is_matrix(v: Any) -> bool:
    return (isinstance(v, list) and bool(v) and all(isinstance(r, list) for r in v)
            and all(isinstance(x, str) for r in v for x in r))


def parse(text: str) -> ReportDocument:
    d = json.loads(text)
    return ReportDocument(d["subcommand"], d["config"], d["outputs"], d["schema_version"])


# -- pipelines --------------------------------------------------------------------------

def _modules(cfg: RunConfig) -> tuple[ModuleSpec, ModuleSpec]:
    if cfg.algebra == "heisenberg":
        return heisenberg_module(cfg.lambda1, "F1"), heisenberg_module(cfg.lambda2, "F2")
    return _virasoro(cfg, cfg.h1, "M1"), _virasoro(cfg, cfg.h2, "M2")


def _virasoro(cfg: RunConfig, h: str, name: str) -> ModuleSpec:
    base = virasoro_module(cfg.c, h, name=name)
    if cfg.singular_levels:
        return singular_at_levels(base, cfg.singular_levels)
    top = DEFAULT_AUTO_MAX if cfg.auto_singular_max is None else cfg.auto_singular_max
    return with_relations(base, auto_singular_relations(base, top))


def _run_singular(cfg: RunConfig) -> dict:
    if cfg.algebra != "virasoro":
        spec = heisenberg_module(cfg.lambda1)
    else:
        spec = virasoro_module(cfg.c, cfg.h1)
    top = DEFAULT_AUTO_MAX + 1 if cfg.auto_singular_max is None else cfg.auto_singular_max
    found = auto_singular_relations(spec, top)
    grams = {}
    for n in range(1, top + 1):
        g = gram_matrix(spec, n)
        grams[str(n)] = {"basis": [word_label(w) for w in level_basis(spec, n)],
                         "matrix": g.to_strings(), "determinant": rat_str(g.det())}
    return {"module": spec.describe(), "max_level": top,
            "singular_vectors": [{"level": lvl, "coefficients": rel.to_json()} for lvl, rel in found],
            "gram_matrices": grams}


def _run_module_basis(cfg: RunConfig) -> dict:
    from .ngk_fusion import _module_cutoff, depth_quotient, special_subspace

    spec, _ = _modules(cfg)
    top = cfg.lmax if cfg.lmax is not None else cfg.depth + 3
    levels = {str(n): [word_label(w) + "|hw" for w in level_basis(spec, n)] for n in range(top + 1)}
    return {
        "module": spec.describe(),
        "levels": levels,
        "level_dims": {k: len(v) for k, v in levels.items()},
        "special_subspace": [word_label(w) + "|hw" for w in special_subspace(spec, _module_cutoff(spec, 0))],
        "depth_quotient": [word_label(w) + "|hw" for w in depth_quotient(spec, cfg.depth,
                                                                           _module_cutoff(spec, cfg.depth))],
    }


def _run_fuse(cfg: RunConfig) -> dict:
    from .ngk_fusion import fuse

    m1, m2 = _modules(cfg)
    res = fuse(m1, m2, cfg.depth, rat(cfg.w), cfg.lmax, escalate=0 if cfg.lmax is not None else ESCALATE)
    out = res.to_json()
    out["modules"] = [m1.describe(), m2.describe()]
    if cfg.check_dual:
        out["crosscheck"] = _dual_check(cfg, m1, m2, res)
    return out


def _dual_check(cfg: RunConfig, m1: ModuleSpec, m2: ModuleSpec, res) -> dict:
    from .hlz_dual import crosscheck, hlz_fuse

    dual = hlz_fuse(m1, m2, cfg.depth, rat(cfg.w), res.lmax)
    return crosscheck(res, dual.l0_matrix, dual.basis_pairs).to_json()


def _run_dual(cfg: RunConfig) -> dict:
    from .hlz_dual import hlz_fuse
    from .ngk_fusion import lmax_floor

    m1, m2 = _modules(cfg)
    lmax = cfg.lmax if cfg.lmax is not None else lmax_floor(m1, m2, cfg.depth)
    out = hlz_fuse(m1, m2, cfg.depth, rat(cfg.w), lmax).to_json()
    out["modules"] = [m1.describe(), m2.describe()]
    return out


def _run_crosscheck(cfg: RunConfig) -> dict:
    from .ngk_fusion import fuse

    m1, m2 = _modules(cfg)
    res = fuse(m1, m2, cfg.depth, rat(cfg.w), cfg.lmax, escalate=0 if cfg.lmax is not None else ESCALATE)
    return {"modules": [m1.describe(), m2.describe()], "basis": res.basis,
            "crosscheck": _dual_check(cfg, m1, m2, res)}


PIPELINES = {
    "singular": _run_singular,
    "module-basis": _run_module_basis,
    "fuse": _run_fuse,
    "dual": _run_dual,
    "crosscheck": _run_crosscheck,
}


def run(cfg: RunConfig) -> tuple[ReportDocument | None, int, str]:
    """Dispatch to a pipeline; returns (report, exit code, diagnostic)."""
    from .hlz_dual import CrosscheckMismatch, UnderdeterminedValues
    from .ngk_fusion import CandidateNotSpanning, NotStabilized

    try:
        outputs = PIPELINES[cfg.subcommand](cfg)
    except NotStabilized as exc:
        return None, EXIT_UNSTABLE, f"not stabilized: {exc}"
    except UnderdeterminedValues as exc:
        return None, EXIT_UNSTABLE, f"not stabilized: {exc}"
    except (CandidateNotSpanning, CrosscheckMismatch) as exc:
        return None, EXIT_ASSERT, f"assertion failed: {exc}"
    except AssertionError as exc:
        return None, EXIT_ASSERT, f"assertion failed: {exc}"
    except (UsageError, ValueError) as exc:
        return None, EXIT_USAGE, f"error: {exc}"
    if cfg.subcommand in ("fuse", "crosscheck") and "crosscheck" in outputs and not outputs["crosscheck"]["ok"]:
        return ReportDocument(cfg.subcommand, cfg.echo(), outputs), EXIT_ASSERT, "cross-check mismatch"
    return ReportDocument(cfg.subcommand, cfg.echo(), outputs), EXIT_OK, ""


# -- argument parsing -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit with 1, not argparse's 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ngkfusion", description="Exact depth-truncated fusion of highest-weight modules.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--algebra", default="virasoro", choices=("virasoro", "heisenberg"))
    p.add_argument("--central-charge", dest="c", default="0", help="central charge, e.g. -2")
    p.add_argument("--h1", default="0", help="conformal weight of the first module")
    p.add_argument("--h2", default="0", help="conformal weight of the second module")
    p.add_argument("--lambda1", default="0", help="Heisenberg momentum of the first module")
    p.add_argument("--lambda2", default="0", help="Heisenberg momentum of the second module")
    p.add_argument("--singular-level", dest="singular_levels", type=int, action="append", default=[],
                   help="impose all singular vectors at this level (repeatable)")
    p.add_argument("--auto-singular-max", type=int, default=None,
                   help="search for singular vectors up to this level")
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--w", default="1", help="insertion point (nonzero rational)")
    p.add_argument("--lmax", type=int, default=None, help="truncation level (default: automatic)")
    p.add_argument("--format", default="json", choices=("json", "text"))
    p.add_argument("--check-dual", action="store_true", help="also solve the dual system and compare")
    return p


_NEGATIVE = re.compile(r"^-\d+(/\d+)?$")


def _attach_negatives(argv: Sequence[str]) -> list[str]:
    """Rewrite '--h1 -1/8' as '--h1=-1/8' so negative rationals are not read as flags."""
    out: list[str] = []
    for tok in argv:
        if out and _NEGATIVE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def config_from_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(_attach_negatives(argv))
    return RunConfig(
        subcommand=ns.subcommand, algebra=ns.algebra, c=ns.c, h1=ns.h1, h2=ns.h2,
        lambda1=ns.lambda1, lambda2=ns.lambda2, singular_levels=tuple(ns.singular_levels),
        auto_singular_max=ns.auto_singular_max, depth=ns.depth, w=ns.w, lmax=ns.lmax,
        format=ns.format, check_dual=ns.check_dual)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc, code, msg = run(cfg)
    if doc is not None:
        sys.stdout.write(emit(doc, cfg.format))
    if msg:
        print(msg, file=sys.stderr)
    return code

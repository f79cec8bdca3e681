"""Command-line entry point: ``lams check|run|denote|verify|props``.

Exit codes: 0 success, 1 user error (parse, type, bad flags), 2 a property or
verification failure (including an exhausted step budget), 3 an internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import syntax as sx
from .harness import PROPERTIES, run_suite, suite_json
from .parser import ParseError, parse_term
from .rewrite import EngineError, Step, normalize
from .scalars import DEFAULT_RING, RINGS, RingError, check_ring
from .semantics import INCOMPARABLE, Incomparable, ShapeError, denote, render, sem_eq
from .typecheck import EMPTY, TypingError, check, typecheck

EXIT_OK, EXIT_USER, EXIT_FAIL, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass(frozen=True)
class CliConfig:
    command: str
    path: Optional[str] = None
    ring: str = DEFAULT_RING
    trace: bool = False
    max_steps: int = 10_000
    seed: int = 0
    count: Optional[int] = None
    fmt: str = "text"
    report: Optional[str] = None
    only: tuple = ()


class UserError(Exception):
    pass


def corpus_names() -> list:
    root = resources.files("lams") / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".lams"))


def read_source(path: str) -> str:
    """Read a ``.lams`` file; ``corpus:NAME`` (or a missing path whose file name is a
    bundled example) reads from the bundled corpus."""
    if path.startswith("corpus:"):
        return _corpus_text(path[len("corpus:"):])
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    if p.suffix == ".lams" and p.stem in corpus_names():
        return _corpus_text(p.stem)
    raise UserError(f"no such file: {path}")


def _corpus_text(name: str) -> str:
    name = name[:-5] if name.endswith(".lams") else name
    if name not in corpus_names():
        raise UserError(f"no corpus entry {name!r} (have {', '.join(corpus_names())})")
    return (resources.files("lams") / "corpus" / f"{name}.lams").read_text(encoding="utf-8")


def load(cfg: CliConfig):
    return parse_term(read_source(cfg.path), cfg.ring)


# ---------------------------------------------------------------- commands


def cmd_check(cfg: CliConfig, out: TextIO) -> int:
    t = load(cfg)
    d = typecheck(t)
    if cfg.fmt == "json":
        out.write(json.dumps({"type": sx.pretty_type(d.type)}) + "\n")
    else:
        out.write(sx.pretty_type(d.type) + "\n")
    return EXIT_OK


def cmd_run(cfg: CliConfig, out: TextIO) -> int:
    t = load(cfg)
    tr = normalize(t, max_steps=cfg.max_steps, ring=cfg.ring)
    if cfg.trace:
        for line in tr.json_lines():
            out.write(line + "\n")
    elif cfg.fmt == "json":
        out.write(json.dumps({"steps": tr.count, "normal_form": sx.pretty(tr.final)},
                             ensure_ascii=False) + "\n")
    else:
        out.write(sx.pretty(tr.final) + "\n")
    if not tr.normal:
        sys.stderr.write(f"step budget of {cfg.max_steps} exhausted before a normal form\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_denote(cfg: CliConfig, out: TextIO) -> int:
    t = load(cfg)
    d = typecheck(t)
    try:
        text = render(denote(d, ring=cfg.ring), d.type)
    except Incomparable as e:
        raise UserError(f"cannot render a value of type {sx.pretty_type(d.type)}: {e}") from None
    if cfg.fmt == "json":
        out.write(json.dumps({"type": sx.pretty_type(d.type), "value": text},
                             ensure_ascii=False) + "\n")
    else:
        out.write(text + "\n")
    return EXIT_OK


def verify_steps(steps: Sequence[Step], ty, ring: str) -> list:
    """Per-step soundness: ``(index, rule, equal, before, after)`` rows, denotations rendered."""
    rows = []
    for i, s in enumerate(steps):
        before = denote(check(EMPTY, s.before, ty), ring=ring)
        try:
            after = denote(check(EMPTY, s.after, ty), ring=ring)
        except TypingError as e:
            rows.append((i, s.rule, False, render(before, ty), f"ill-typed: {e}"))
            continue
        eq = sem_eq(before, after, ty)
        if eq is INCOMPARABLE:
            raise UserError(f"values of type {sx.pretty_type(ty)} cannot be compared")
        rows.append((i, s.rule, eq, render(before, ty), render(after, ty)))
    return rows


def cmd_verify(cfg: CliConfig, out: TextIO) -> int:
    t = load(cfg)
    d = typecheck(t)
    tr = normalize(t, max_steps=cfg.max_steps, ring=cfg.ring)
    rows = verify_steps(tr.steps, d.type, cfg.ring)
    good = sum(1 for r in rows if r[2])
    if cfg.fmt == "json":
        for i, rule, eq, b, a in rows:
            out.write(json.dumps({"index": i, "rule": rule, "equal": eq, "before": b,
                                  "after": a}, ensure_ascii=False) + "\n")
        out.write(json.dumps({"steps": len(rows), "equal": good, "ok": good == len(rows)}) + "\n")
    else:
        for i, rule, eq, b, a in rows:
            if eq:
                out.write(f"step {i} {rule}: ok\n")
            else:
                out.write(f"step {i} {rule}: MISMATCH\n  before: {b}\n  after:  {a}\n")
        out.write(f"{good}/{len(rows)} steps equal\n")
    if not tr.normal:
        sys.stderr.write(f"step budget of {cfg.max_steps} exhausted before a normal form\n")
        return EXIT_FAIL
    return EXIT_OK if good == len(rows) else EXIT_FAIL


def cmd_props(cfg: CliConfig, out: TextIO) -> int:
    names = cfg.only or PROPERTIES
    reports = run_suite(seed=cfg.seed, count=cfg.count, ring=cfg.ring, names=names)
    if cfg.report:
        Path(cfg.report).write_text(suite_json(reports) + "\n", encoding="utf-8")
    if cfg.fmt == "json":
        out.write(suite_json(reports) + "\n")
    else:
        for r in reports:
            out.write(r.summary() + "\n")
            for f in r.failures[:5]:
                out.write(f"  case {f.case}: {f.message}\n")
                if f.shrunk:
                    out.write(f"    minimized: {f.shrunk} : {f.goal}\n")
        failed = sum(len(r.failures) for r in reports)
        out.write(f"{len(reports)} properties, {failed} failures\n")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


COMMANDS = {"check": cmd_check, "run": cmd_run, "denote": cmd_denote, "verify": cmd_verify,
            "props": cmd_props}


# ---------------------------------------------------------------- argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset after it
    common.add_argument("--ring", choices=RINGS, default=argparse.SUPPRESS,
                        help="scalar ring (default: $LAMS_RING or qsi)")
    common.add_argument("--format", dest="fmt", choices=("text", "json"),
                        default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="lams", parents=[common],
                                description="Typecheck, run and interpret .lams programs.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("check", "print the minimal type"),
                            ("denote", "print the denotation"),):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("path")
    for name, help_text in (("run", "normalize and print the normal form"),
                            ("verify", "check every rewrite step against the model")):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("path")
        sp.add_argument("--max-steps", type=int, default=10_000)
        if name == "run":
            sp.add_argument("--trace", action="store_true", help="emit a JSON-lines trace")
    sp = sub.add_parser("props", parents=[common], help="run the property suite")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=None, help="cases per property")
    sp.add_argument("--report", default=None, help="write the JSON report to this file")
    sp.add_argument("--only", nargs="+", choices=PROPERTIES, default=None)
    return p


def parse_config(argv: Optional[Sequence[str]] = None) -> CliConfig:
    ns = build_parser().parse_args(argv)
    ring = getattr(ns, "ring", None) or os.environ.get("LAMS_RING") or DEFAULT_RING
    check_ring(ring)
    max_steps = getattr(ns, "max_steps", 10_000)
    if max_steps < 0:
        raise UserError("--max-steps must be non-negative")
    count = getattr(ns, "count", None)
    if count is not None and count < 1:
        raise UserError("--count must be positive")
    return CliConfig(command=ns.command, path=getattr(ns, "path", None), ring=ring,
                     trace=getattr(ns, "trace", False), max_steps=max_steps,
                     seed=getattr(ns, "seed", 0), count=count, fmt=getattr(ns, "fmt", "text"),
                     report=getattr(ns, "report", None), only=tuple(getattr(ns, "only", None) or ()))


def _error(fmt: str, payload: dict, text: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")
    sys.stderr.write(text + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    fmt = "json" if "json" in argv else "text"
    try:
        cfg = parse_config(argv)
    except SystemExit as e:  # argparse reports bad flags itself
        return EXIT_OK if e.code == 0 else EXIT_USER
    except (UserError, RingError) as e:
        _error(fmt, {"error": "usage", "message": str(e)}, f"error: {e}")
        return EXIT_USER
    try:
        return COMMANDS[cfg.command](cfg, sys.stdout)
    except ParseError as e:
        _error(cfg.fmt, e.to_json(), f"parse error: {e}")
        return EXIT_USER
    except TypingError as e:
        _error(cfg.fmt, e.to_json(), e.to_json_line())
        return EXIT_USER
    except (UserError, RingError) as e:
        _error(cfg.fmt, {"error": "usage", "message": str(e)}, f"error: {e}")
        return EXIT_USER
    except (EngineError, ShapeError) as e:
        _error(cfg.fmt, {"error": "internal", "message": str(e)}, f"internal error: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

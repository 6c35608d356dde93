"""Command-line front end.

Exit status: 0 success or valid certificate, 1 invalid certificate,
2 usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import bench as bench_mod
from .certify import CertificateError, analyze, check, decode, encode, leaks
from .corpus.generator import GenSpec, InfeasibleSpecError, generate, generate_config
from .dataflow import MissingSummaryError, ProgramContext
from .graphs import GraphError, cfg_to_dot
from .ir import IRError, parse_file

EXIT_OK, EXIT_INVALID, EXIT_ERROR = 0, 1, 2

log = logging.getLogger("certflow")


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    subcommand: str
    inputs: list[str] = field(default_factory=list)
    config: Optional[str] = None
    cert: Optional[str] = None
    output: Optional[str] = None
    entry_only: bool = False
    emit_cfg: Optional[str] = None
    emit_cg: Optional[str] = None
    json_output: bool = False
    seed: int = 0
    gen: Optional[GenSpec] = None
    config_out: Optional[str] = None
    sizes: tuple[int, ...] = bench_mod.DEFAULT_SIZES
    repeats: int = 3
    depth: Optional[int] = None

    def validate(self) -> None:
        needs_program = self.subcommand in ("analyze", "check", "leaks")
        if needs_program:
            if len(self.inputs) != 1:
                raise UsageError(f"{self.subcommand} takes exactly one IR file")
            paths = [self.inputs[0]] + ([self.config] if self.config else [])
            if self.subcommand != "analyze":
                if not self.cert:
                    raise UsageError(f"{self.subcommand} needs --cert")
                paths.append(self.cert)
            for p in paths:
                if not Path(p).is_file():
                    raise UsageError(f"no such file: {p}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="certflow",
                                 description="Certified taint analysis of the textual IR.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def program_args(p, cert_required: bool):
        p.add_argument("program", help="IR file")
        p.add_argument("-c", "--config", help="taint configuration (.cfgtaint)")
        p.add_argument("--cert", required=cert_required, help="certificate (.dcert)")
        p.add_argument("--json-output", action="store_true")

    a = sub.add_parser("analyze", help="compute a certificate")
    program_args(a, False)
    a.add_argument("-o", "--output", help="write the certificate here (default: stdout)")
    a.add_argument("--entry-only", action="store_true", help="report leaks at entry points only")
    a.add_argument("--emit-cfg", metavar="DIR", help="write one DOT file per method")
    a.add_argument("--emit-cg", metavar="FILE", help="write the call graph as DOT")

    c = sub.add_parser("check", help="validate a certificate in one pass")
    program_args(c, True)

    lk = sub.add_parser("leaks", help="list source-to-sink pairs in a certificate")
    program_args(lk, True)
    lk.add_argument("--entry-only", action="store_true")

    b = sub.add_parser("bench", help="time analysis against checking on generated corpora")
    b.add_argument("--sizes", default=",".join(map(str, bench_mod.DEFAULT_SIZES)))
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--depth", type=int, help="call-chain depth (default: scaled with size)")
    b.add_argument("--json-output", action="store_true")

    g = sub.add_parser("gen", help="emit a synthetic program")
    g.add_argument("--methods", type=int, default=GenSpec.method_count)
    g.add_argument("--depth", type=int, default=GenSpec.call_chain_depth)
    g.add_argument("--fan-out", type=int, default=GenSpec.fan_out)
    g.add_argument("--stmts", type=int, default=GenSpec.stmts_per_method)
    g.add_argument("--branch-density", type=float, default=GenSpec.branch_density)
    g.add_argument("--array-field-density", type=float, default=GenSpec.array_field_density)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", help="IR destination (default: stdout)")
    g.add_argument("--config-out", help="also write the matching taint configuration")
    g.add_argument("--json-output", action="store_true")
    return ap


def to_config(ns: argparse.Namespace) -> CliConfig:
    cfg = CliConfig(ns.subcommand, json_output=getattr(ns, "json_output", False))
    if ns.subcommand in ("analyze", "check", "leaks"):
        cfg.inputs = [ns.program]
        cfg.config = ns.config
        cfg.cert = ns.cert
        cfg.entry_only = getattr(ns, "entry_only", False)
        if ns.subcommand == "analyze":
            cfg.output, cfg.emit_cfg, cfg.emit_cg = ns.output, ns.emit_cfg, ns.emit_cg
    elif ns.subcommand == "bench":
        try:
            cfg.sizes = tuple(int(s) for s in ns.sizes.split(",") if s)
        except ValueError:
            raise UsageError(f"bad --sizes {ns.sizes!r}") from None
        cfg.repeats, cfg.seed, cfg.depth = ns.repeats, ns.seed, ns.depth
    else:
        cfg.gen = GenSpec(ns.methods, ns.depth, ns.fan_out, ns.stmts, ns.branch_density,
                          ns.array_field_density, ns.seed)
        cfg.seed, cfg.output, cfg.config_out = ns.seed, ns.output, ns.config_out
    return cfg


def _emit(cfg: CliConfig, payload: dict, text: str) -> None:
    if cfg.json_output:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")


def _leak_lines(report) -> str:
    if not report.leaks:
        return "no leaks\n"
    return "".join(f"leak: {l.method}: {l.source} -> {l.sink}\n" for l in report)


def _leak_json(report) -> list[dict]:
    return [{"method": l.method, "sink": l.sink, "source": l.source} for l in report]


def _cmd_analyze(cfg: CliConfig, program) -> int:
    ctx = ProgramContext(program)
    cert = analyze(program, context=ctx)
    text = encode(cert)
    if cfg.emit_cfg:
        out = Path(cfg.emit_cfg)
        out.mkdir(parents=True, exist_ok=True)
        for mid in program.methods():
            name = mid.replace("/", "_") + ".dot"
            (out / name).write_text(cfg_to_dot(ctx.method(mid).cfg))
    if cfg.emit_cg:
        Path(cfg.emit_cg).write_text(ctx.call_graph.to_dot())
    report = leaks(cert, program, cfg.entry_only)
    if cfg.output:
        Path(cfg.output).write_text(text)
        summary = f"certificate: {cfg.output} ({len(cert.entries)} methods)\n"
    else:
        summary = text
    _emit(cfg, {"certificate": cfg.output or json.loads(text), "methods": len(cert.entries),
                "leaks": _leak_json(report)}, summary + _leak_lines(report))
    return EXIT_OK


def _cmd_check(cfg: CliConfig, program) -> int:
    cert = decode(Path(cfg.cert).read_text())
    try:
        result = check(program, cert)
    except MissingSummaryError as e:  # an entry a callee needs was absent
        raise CertificateError(f"missing entry for {e.method_id}") from None
    payload = {"verdict": result.verdict, "summarise_calls": result.summarise_calls}
    if result.valid:
        _emit(cfg, payload, "valid")
        return EXIT_OK
    f = result.failure
    payload["failure"] = {"method": f.method_id, "reason": f.reason,
                          "missing": sorted(map(list, f.missing)),
                          "extra": sorted(map(list, f.extra))}
    _emit(cfg, payload, "invalid\n" + f.describe())
    return EXIT_INVALID


def _cmd_leaks(cfg: CliConfig, program) -> int:
    cert = decode(Path(cfg.cert).read_text())
    report = leaks(cert, program, cfg.entry_only)
    _emit(cfg, {"entry_only": cfg.entry_only, "leaks": _leak_json(report)}, _leak_lines(report))
    return EXIT_OK


def _cmd_bench(cfg: CliConfig) -> int:
    rows = bench_mod.run_bench(cfg.sizes, cfg.repeats, cfg.seed, cfg.depth)
    if cfg.json_output:
        sys.stdout.write(bench_mod.format_json(rows))
    else:
        sys.stdout.write(bench_mod.format_tsv(rows))
    return EXIT_OK


def _cmd_gen(cfg: CliConfig) -> int:
    text = generate(cfg.gen)
    conf = generate_config(cfg.gen)
    if cfg.config_out:
        Path(cfg.config_out).write_text(conf)
    if cfg.output:
        Path(cfg.output).write_text(text)
        if cfg.json_output:
            print(json.dumps({"program": cfg.output, "config": cfg.config_out}))
    elif cfg.json_output:
        print(json.dumps({"program": text, "config": conf}))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run(cfg: CliConfig) -> int:
    try:
        cfg.validate()
        if cfg.subcommand == "bench":
            return _cmd_bench(cfg)
        if cfg.subcommand == "gen":
            return _cmd_gen(cfg)
        program = parse_file(cfg.inputs[0], cfg.config)
        return {"analyze": _cmd_analyze, "check": _cmd_check,
                "leaks": _cmd_leaks}[cfg.subcommand](cfg, program)
    except (UsageError, IRError, GraphError, CertificateError, InfeasibleSpecError,
            OSError) as e:
        print(f"certflow: error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = to_config(ns)
    except UsageError as e:
        print(f"certflow: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

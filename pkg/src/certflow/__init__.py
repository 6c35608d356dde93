"""Certified summary-based taint analysis over a small Jimple-like IR."""

from .certify import (Certificate, CheckResult, Failure, Leak, LeakReport, analyze, check, decode,
                      encode, leaks, load, save)
from .dataflow import ProgramContext, flow, kill, method_summary, summarise, transfer
from .ir import Program, parse_config, parse_file, parse_program

__all__ = [
    "Certificate", "CheckResult", "Failure", "Leak", "LeakReport", "Program", "ProgramContext",
    "analyze", "check", "decode", "encode", "flow", "kill", "leaks", "load", "method_summary",
    "parse_config", "parse_file", "parse_program", "save", "summarise", "transfer",
]

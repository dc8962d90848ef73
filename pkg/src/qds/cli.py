"""``qds`` command-line interface.

Exit status: 0 success, 1 a numerical check failed, 2 malformed input.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__, kernels
from .dilation import build_dilation, dim_cap, run_checks
from .errors import CapExceededError, DisagreementError, NonFaithfulStateError, NonInvariantStateError, QDSError, VerificationError
from .io import (
    InputFormatError,
    channel_from_json,
    channel_to_json,
    dumps,
    lindblad_from_json,
    load_json,
    state_from_json,
    state_to_json,
    tensor_from_json,
)
from .semigroup import (
    classify,
    invariant_state,
    kms_dual,
    kms_residual,
    lindblad_channel,
    spectrum,
)
from .spinchain import marginal_consistency, marginal_density, purity_check, support_reduce, word_table
from .sweeps import run_sweep

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class CheckFailed(Exception):
    def __init__(self, report: dict):
        super().__init__("check failed")
        self.report = report


def _residual(check: str, value: float, tol: float) -> dict:
    return {"check": check, "residual": float(value), "tolerance": tol, "pass": bool(value <= tol)}


def _load_channel(args):
    if getattr(args, "lindblad", None):
        gen = lindblad_from_json(load_json(args.lindblad))
        return lindblad_channel(gen, args.time)
    if not args.channel:
        raise InputFormatError("--channel", "required")
    return channel_from_json(load_json(args.channel))


def _load_state(args, cp_map):
    if getattr(args, "state", None):
        state = state_from_json(load_json(args.state))
        if state.dim != cp_map.dim:
            raise InputFormatError("dim", "state and channel dimensions differ")
        return state
    return invariant_state(cp_map)


def cmd_analyze(args) -> dict:
    c = _load_channel(args)
    state = _load_state(args, c)
    cl = classify(c, state, tol=args.tol)
    out = cl.as_dict()
    out["gap"] = cl.spectral_gap
    out["state"] = state_to_json(state)
    residuals = []
    defect = cl.residuals.get("correlation_defect")
    if defect is not None:
        residuals.append({"check": "correlation_defect", "residual": defect, "tolerance": 1e-6,
                          "pass": (defect <= 1e-6) == cl.kolmogorov})
    return {"result": out, "residuals": residuals}


def cmd_dual(args) -> dict:
    c = _load_channel(args)
    state = _load_state(args, c)
    d = kms_dual(c, state)
    res = [
        _residual("adjoint_relation", kms_residual(c, d, state), args.tol),
        _residual("involution", float(np.abs(kms_dual(d, state).superop.matrix - c.superop.matrix).max()), args.tol),
        _residual("unital", float(np.linalg.norm(d(np.eye(c.dim)) - np.eye(c.dim))), args.tol),
    ]
    return {"result": {"dual": channel_to_json(d), "state": state_to_json(state)}, "residuals": res}


def cmd_spectrum(args) -> dict:
    c = _load_channel(args)
    sp = spectrum(c)
    ev = sorted(sp["eigenvalues"], key=lambda z: (-abs(z), np.angle(z)))
    return {
        "result": {
            "eigenvalues": [complex(z) for z in ev],
            "peripheral": sp["peripheral"],
            "second_modulus": sp["second_modulus"],
            "gap": sp["gap"],
        },
        "residuals": [],
    }


def cmd_dilate(args) -> dict:
    c = _load_channel(args)
    state = _load_state(args, c)
    checks = [s for s in args.checks.split(",") if s]
    unknown = set(checks) - {"markov", "compression", "cyclicity"}
    if unknown:
        raise InputFormatError("--checks", f"unknown checks {sorted(unknown)}")
    d = build_dilation(c, state, args.horizon)
    rep = run_checks(d, checks, args.tol)
    out = rep.as_dict()
    return {"result": {k: v for k, v in out.items() if k != "residuals"} | {"support_reduced": d.support_reduced},
            "residuals": out["residuals"]}


def _load_tensor(args):
    if not args.tensor:
        raise InputFormatError("--tensor", "required")
    t = tensor_from_json(load_json(args.tensor))
    return t, validate_report(t, args.tol)


def validate_report(t, tol):
    res = t.row_isometry_residual()
    rep = _residual("row_isometry", res, max(tol, 1e-10))
    if not rep["pass"]:
        raise CheckFailed({"result": {}, "residuals": [rep]})
    return rep


def cmd_chain_purity(args) -> dict:
    t, rep = _load_tensor(args)
    r = purity_check(t, max(args.tol, 1e-10))
    return {"result": r.as_dict(), "residuals": [rep]}


def cmd_chain_marginal(args) -> dict:
    t, rep = _load_tensor(args)
    if args.sites is None or args.sites < 1:
        raise InputFormatError("--sites", "expected a positive integer")
    reduced, state = support_reduce(t)
    dm = marginal_density(reduced, state, args.sites, check=False)
    cons = marginal_consistency(reduced, state, args.sites, dm.rho)
    res = [rep] + [_residual(k, v, 1e-10) for k, v in cons.items()]
    res.append(_residual("psd", max(0.0, -float(dm.eigenvalues.min())), 1e-10))
    return {"result": {"sites": args.sites, "marginal": {**state_to_json(dm)}}, "residuals": res}


def cmd_chain_words(args) -> dict:
    t, rep = _load_tensor(args)
    reduced, state = support_reduce(t)
    table = word_table(reduced, state, args.max_len)
    rows = [{"I": list(i), "J": list(j), "value": v} for (i, j), v in table.items()]
    compat = 0.0
    for (i, j), v in table.items():
        if len(i) < args.max_len and len(j) < args.max_len:
            compat = max(compat, abs(sum(table[(i + (a,), j + (a,))] for a in range(t.d)) - v))
    return {
        "result": {"max_len": args.max_len, "letters": "0-based", "table": rows},
        "residuals": [rep, _residual("compatibility", compat, 1e-12)],
    }


def cmd_sweep(args) -> dict:
    if args.count < 0 or args.dim < 2:
        raise InputFormatError("--count/--dim", "count >= 0 and dim >= 2 required")
    rep = run_sweep(args.kind, args.count, args.dim, args.seed, args.workers)
    res = []
    if args.kind == "lindblad":
        res.append(_residual("counterexamples_ergodic_not_mixing", rep["counterexamples_ergodic_not_mixing"], 0))
    else:
        res.append(_residual("kms_residual", rep["max_kms_residual"], args.tol))
        res.append(_residual("involution_residual", rep["max_involution_residual"], args.tol))
    res.append(_residual("instance_errors", rep["errors"], 0))
    return {"result": rep, "residuals": res}


COMMANDS = {
    "analyze": cmd_analyze,
    "dual": cmd_dual,
    "spectrum": cmd_spectrum,
    "dilate": cmd_dilate,
    "chain-purity": cmd_chain_purity,
    "chain-marginal": cmd_chain_marginal,
    "chain-words": cmd_chain_words,
    "sweep": cmd_sweep,
}


def _common(p: argparse.ArgumentParser, tol: float = 1e-9):
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qds", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qds {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [("analyze", "ergodic / mixing / Kolmogorov classification"),
                        ("dual", "KMS-adjoint channel and its residuals"),
                        ("spectrum", "superoperator spectrum and gap")]:
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--channel")
        src.add_argument("--lindblad", help="generator file; the channel is exp(time * L)")
        p.add_argument("--time", type=float, default=1.0)
        if name != "spectrum":
            p.add_argument("--state")
        _common(p)

    p = sub.add_parser("dilate", help="finite-horizon weak Markov dilation checks")
    p.add_argument("--channel", required=True)
    p.add_argument("--state")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--checks", default="markov,compression,cyclicity")
    _common(p, 1e-10)

    def chain_args(p, what):
        p.add_argument("--tensor", required=True)
        if what == "marginal":
            p.add_argument("--sites", type=int, required=True)
        if what == "words":
            p.add_argument("--max-len", type=int, default=4)
        _common(p, 1e-10)

    chain = sub.add_parser("chain", help="spin-chain commands")
    chain_sub = chain.add_subparsers(dest="chain_command", required=True)
    for what in ("purity", "marginal", "words"):
        chain_args(chain_sub.add_parser(what), what)
        chain_args(sub.add_parser(f"chain-{what}"), what)

    p = sub.add_parser("sweep", help="seeded random property sweeps")
    p.add_argument("--kind", choices=["lindblad", "kms"], required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    return parser


def run(argv=None) -> tuple[int, str]:
    """Parse ``argv``, execute and return (exit code, JSON report)."""
    return execute(build_parser().parse_args(argv))


def execute(args: argparse.Namespace) -> tuple[int, str]:
    command = args.command
    if command == "chain":
        command = f"chain-{args.chain_command}"
    envelope = {
        "tool_version": __version__,
        "command": command,
        "seed": args.seed,
        "tolerances": {"tol": args.tol},
        "backend": kernels.BACKEND,
    }
    if command == "dilate":
        envelope["dim_cap"] = dim_cap()
    try:
        body = COMMANDS[command](args)
        code = EXIT_OK if all(r.get("pass", True) for r in body["residuals"]) else EXIT_CHECK
    except CheckFailed as exc:
        body, code = exc.report, EXIT_CHECK
    except InputFormatError as exc:
        body = {"error": "input", "field": exc.field, "message": str(exc), "residuals": []}
        code = EXIT_INPUT
    except (NonInvariantStateError, NonFaithfulStateError, CapExceededError) as exc:
        body = {"error": type(exc).__name__, "message": str(exc), "residuals": []}
        code = EXIT_INPUT
    except (VerificationError, DisagreementError) as exc:
        body = {"error": type(exc).__name__, "message": str(exc),
                "residuals": [{"check": k, "residual": v, "pass": False} for k, v in exc.residuals.items()]}
        code = EXIT_CHECK
    except QDSError as exc:
        body = {"error": type(exc).__name__, "message": str(exc), "residuals": []}
        code = EXIT_INPUT
    report = {**envelope, **body, "pass": code == EXIT_OK}
    text = dumps(report) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return code, text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, text = execute(args)
    if not args.out:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Instance/certificate file formats and the command-line interface.

Documents are JSON with every numeric entry an integer, a rational string
like "3/2" or "-4", or the token "-inf".  Instances come in the original
form {A,B,c,d,p,q,r,s} or the homogeneous form {C,D,u,v}, optionally with
"objective": "minimize" (default) or "maximize" (handled by dualization at
parse time).  Certificates carry 1-based strategy successor arrays.

Exit codes: 0 optimal / certificate accepted, 1 usage or parse error,
2 infeasible, 3 unbounded, 4 certificate rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import List, Optional, Sequence, TextIO

from . import certify, solver
from .game_engine import MaxStrategy, MinStrategy, game_value
from .spectral import GridTooLarge, LfpInstance, game_at, homogenize, reconstruct
from .trop_core import NEG_INF, ExtendedNumber, ext


class DocumentError(Exception):
    """A document failed to parse or has inconsistent shapes."""


# --- scalar tokens ---------------------------------------------------------


def parse_entry(token, where: str = "entry") -> ExtendedNumber:
    """int / rational string / "-inf" -> ExtendedNumber (no +inf, no NaN)."""
    if isinstance(token, bool):
        raise DocumentError(f"{where}: booleans are not numbers")
    if isinstance(token, int):
        return ExtendedNumber.finite(token)
    if isinstance(token, str):
        text = token.strip()
        if text == "-inf":
            return NEG_INF
        try:
            return ExtendedNumber.finite(Fraction(text))
        except (ValueError, ZeroDivisionError):
            raise DocumentError(f"{where}: cannot parse {token!r} as a rational")
    raise DocumentError(f"{where}: unsupported value {token!r}")


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_entry(e: ExtendedNumber) -> str:
    return format_rational(e.value) if e.is_finite else "-inf"


def _parse_vector(doc, key: str) -> list:
    if key not in doc:
        raise DocumentError(f"missing field {key!r}")
    v = doc[key]
    if not isinstance(v, list):
        raise DocumentError(f"field {key!r} must be an array")
    return [parse_entry(e, f"{key}[{i}]") for i, e in enumerate(v)]


def _parse_matrix(doc, key: str) -> list:
    if key not in doc:
        raise DocumentError(f"missing field {key!r}")
    rows = doc[key]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise DocumentError(f"field {key!r} must be an array of arrays")
    return [
        [parse_entry(e, f"{key}[{i}][{j}]") for j, e in enumerate(row)]
        for i, row in enumerate(rows)
    ]


# --- instance documents ----------------------------------------------------


class ParsedInstance:
    """An LfpInstance plus how to map its optimum back to the document."""

    __slots__ = ("instance", "maximize")

    def __init__(self, instance: LfpInstance, maximize: bool):
        self.instance = instance
        self.maximize = maximize

    def objective_value(self, lam: Fraction) -> Fraction:
        """Document-level optimum: -lambda* under the maximize dualization."""
        return -Fraction(lam) if self.maximize else Fraction(lam)


def parse_instance(doc: dict) -> ParsedInstance:
    if not isinstance(doc, dict):
        raise DocumentError("instance document must be a JSON object")
    objective = doc.get("objective", "minimize")
    if objective not in ("minimize", "maximize"):
        raise DocumentError(f"unknown objective {objective!r}")
    if "C" in doc or "D" in doc:
        C = _parse_matrix(doc, "C")
        D = _parse_matrix(doc, "D")
        u = _parse_vector(doc, "u")
        v = _parse_vector(doc, "v")
        if not C or len(C[0]) < 1:
            raise DocumentError("C must have at least one column")
        n = len(C[0]) - 1
        if len(u) != n + 1 or len(v) != n + 1:
            raise DocumentError("u and v must have one entry per column of C")
        A = [row[:n] for row in C]
        c = [row[n] for row in C]
        B = [row[:n] for row in D]
        d = [row[n] for row in D]
        p, r = u[:n], u[n]
        q, s = v[:n], v[n]
    else:
        A = _parse_matrix(doc, "A")
        B = _parse_matrix(doc, "B")
        c = _parse_vector(doc, "c")
        d = _parse_vector(doc, "d")
        p = _parse_vector(doc, "p")
        q = _parse_vector(doc, "q")
        r = parse_entry(doc.get("r", "-inf"), "r")
        s = parse_entry(doc.get("s", "-inf"), "s")
    if objective == "maximize":
        # max (num - den) = -min (den - num): swap numerator and denominator
        # and negate the reported optimum.
        p, r, q, s = q, s, p, r
    try:
        inst = LfpInstance(A, B, c, d, p, q, r, s)
    except ValueError as exc:
        raise DocumentError(str(exc))
    return ParsedInstance(inst, objective == "maximize")


def serialize_instance(inst: LfpInstance) -> dict:
    return {
        "A": [[format_entry(e) for e in row] for row in inst.A.entries],
        "B": [[format_entry(e) for e in row] for row in inst.B.entries],
        "c": [format_entry(e) for e in inst.c],
        "d": [format_entry(e) for e in inst.d],
        "p": [format_entry(e) for e in inst.p],
        "q": [format_entry(e) for e in inst.q],
        "r": format_entry(inst.r),
        "s": format_entry(inst.s),
        "objective": "minimize",
    }


# --- certificate documents -------------------------------------------------


def serialize_certificate(cert) -> dict:
    if isinstance(cert, certify.OptimalityCertificate):
        doc = {
            "type": "optimality",
            "lambda": format_rational(cert.lam),
            "tau": [i + 1 for i in cert.tau.choices],
        }
        if cert.witness is not None:
            doc["witness"] = [format_entry(e) for e in cert.witness]
        return doc
    if isinstance(cert, certify.UnboundednessCertificate):
        return {"type": "unboundedness", "sigma": [l + 1 for l in cert.sigma.choices]}
    raise ValueError(f"unknown certificate object {cert!r}")


def parse_certificate(doc: dict, m: int, n: int):
    """Certificate objects from a document, checked against homogenized m, n."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise DocumentError("certificate document must be an object with a 'type'")
    kind = doc["type"]
    if kind == "optimality":
        if "lambda" not in doc or "tau" not in doc:
            raise DocumentError("optimality certificate needs 'lambda' and 'tau'")
        lam = parse_entry(doc["lambda"], "lambda")
        if not lam.is_finite:
            raise DocumentError("lambda must be finite")
        tau = doc["tau"]
        if not isinstance(tau, list) or len(tau) != n + 1:
            raise DocumentError(f"tau must list {n + 1} successors")
        choices = []
        for j, i in enumerate(tau):
            if not isinstance(i, int) or not (1 <= i <= m + 1):
                raise DocumentError(f"tau[{j}] must be a row index in 1..{m + 1}")
            choices.append(i - 1)
        witness = None
        if "witness" in doc:
            w = _parse_vector(doc, "witness")
            if len(w) != n + 1:
                raise DocumentError(f"witness must have {n + 1} coordinates")
            witness = tuple(w)
        return certify.OptimalityCertificate(lam.value, MinStrategy(tuple(choices)), witness)
    if kind == "unboundedness":
        if "sigma" not in doc:
            raise DocumentError("unboundedness certificate needs 'sigma'")
        sigma = doc["sigma"]
        if not isinstance(sigma, list) or len(sigma) != m + 1:
            raise DocumentError(f"sigma must list {m + 1} successors")
        choices = []
        for i, l in enumerate(sigma):
            if not isinstance(l, int) or not (1 <= l <= n + 1):
                raise DocumentError(f"sigma[{i}] must be a column index in 1..{n + 1}")
            choices.append(l - 1)
        return certify.UnboundednessCertificate(MaxStrategy(tuple(choices)))
    raise DocumentError(f"unknown certificate type {kind!r}")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")


# --- commands --------------------------------------------------------------


def cmd_solve(args, out: TextIO) -> int:
    parsed = parse_instance(_load_json(args.instance))
    lam0 = None
    if args.lambda0 is not None:
        lam0 = Fraction(args.lambda0)
        if parsed.maximize:
            lam0 = -lam0
    outcome = solver.solve(parsed.instance, method=args.method, lam0=lam0)
    for (k, lam, sign) in outcome.trace:
        print(f"iteration {k}: lambda = {format_rational(lam)} (phi {sign})", file=out)
    if outcome.status == "Infeasible":
        print("infeasible", file=out)
        return 2
    if outcome.status == "Unbounded":
        print("unbounded", file=out)
        if args.cert_out and outcome.certificate is not None:
            _write_json(args.cert_out, serialize_certificate(outcome.certificate))
        return 3
    print(f"optimal {format_rational(parsed.objective_value(outcome.lam))}", file=out)
    print(f"lambda* = {format_rational(outcome.lam)}", file=out)
    if outcome.witness is not None:
        coords = " ".join(format_entry(e) for e in outcome.witness)
        print(f"witness x = ({coords})", file=out)
    if args.cert_out and outcome.certificate is not None:
        _write_json(args.cert_out, serialize_certificate(outcome.certificate))
    return 0


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_spectral(args, out: TextIO) -> int:
    parsed = parse_instance(_load_json(args.instance))
    H = homogenize(parsed.instance)
    try:
        pieces = reconstruct(H)
    except GridTooLarge as exc:
        print(f"error: {exc}; reduce the instance or raise the grid cap", file=sys.stderr)
        return 1
    lines = ["piece,lo,hi,alpha,beta,k"]
    for piece in pieces:
        lines.append(
            "piece,{},{},{},{},{}".format(
                format_entry(piece.lo) if piece.lo.kind != 1 else "+inf",
                "+inf" if piece.hi.kind == 1 else format_entry(piece.hi),
                format_rational(piece.alpha),
                piece.beta,
                piece.k,
            )
        )
    lines.append("sample,lambda,phi")
    samples = []
    for piece in pieces:
        if piece.lo.is_finite:
            samples.append(piece.lo.value)
        if piece.hi.is_finite:
            samples.append(piece.hi.value)
    if samples:
        span = sorted(set(samples))
        lo, hi = span[0] - 1, span[-1] + 1
        step = Fraction(hi - lo, 32)
        grid = [lo + step * t for t in range(33)]
    else:
        grid = [Fraction(t) for t in range(-4, 5)]
    from .spectral import phi

    for lam in grid:
        val = phi(H, lam)
        lines.append(
            "sample,{},{}".format(
                format_rational(Fraction(lam) / H.scale),
                format_rational(Fraction(val) / H.scale),
            )
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def cmd_check(args, out: TextIO) -> int:
    parsed = parse_instance(_load_json(args.instance))
    H = homogenize(parsed.instance)
    cert = parse_certificate(_load_json(args.certificate), H.m, H.n)
    if isinstance(cert, certify.OptimalityCertificate):
        result = certify.check_optimality(H, cert)
    else:
        result = certify.check_unboundedness(H, cert)
    if result:
        print("accept", file=out)
        return 0
    print(f"reject: {result.reason}", file=out)
    return 4


def cmd_game_value(args, out: TextIO) -> int:
    parsed = parse_instance(_load_json(args.instance))
    H = homogenize(parsed.instance)
    node = args.node if args.node is not None else H.n + 1
    if not (1 <= node <= H.n + 1):
        print(f"error: node must be in 1..{H.n + 1}", file=sys.stderr)
        return 1
    lam = Fraction(args.lam) * H.scale
    chi = game_value(game_at(H, lam), node - 1)
    print(format_rational(chi / H.scale), file=out)
    return 0


# --- argument parsing ------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DocumentError(message)


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="troplf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("--method", choices=["newton", "bisection", "negative-newton"], default="newton")
    p.add_argument("--lambda0", type=_rational, default=None)
    p.add_argument("--cert-out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("spectral", help="reconstruct the spectral function pieces")
    p.add_argument("instance")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("check", help="validate a certificate against an instance")
    p.add_argument("instance")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("game-value", help="exact game value at a node")
    p.add_argument("instance")
    p.add_argument("--lambda", dest="lam", type=_rational, required=True)
    p.add_argument("--node", type=int, default=None)
    p.set_defaults(func=cmd_game_value)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, sys.stdout)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help and friends
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())

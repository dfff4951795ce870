"""Line-oriented text format for instances.

::

    NQP 1
    DOMAIN int            # or: real
    PSD declared          # or: unknown
    N 2
    S 3 : 0 1 2           # count, colon, ascending values
    Q
    2 -1
    -1 2
    C
    0 0

``#`` starts a comment anywhere on a line.  A reduction certificate is
written as a trailing block of ``# key value`` comment lines introduced by
``# CERTIFICATE``; the instance parser ignores it.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .core import INT, REAL, DimensionMismatch, InvalidInstance, LevelSet, NQPError, QPInstance
from .reduction import ReductionCertificate

FORMAT_VERSION = "1"
CERT_HEADER = "CERTIFICATE"


class ParseError(NQPError, ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _number(tok: str, domain: str, lineno: int):
    try:
        return int(tok) if domain == INT else float(tok)
    except ValueError:
        raise ParseError(lineno, f"bad {domain} literal {tok!r}") from None


def _keyword(lines, expect: str, nargs: int | None = None):
    try:
        lineno, toks = next(lines)
    except StopIteration:
        raise ParseError(None, f"unexpected end of file, expected {expect!r}") from None
    if toks[0].upper() != expect:
        raise ParseError(lineno, f"expected {expect!r}, found {toks[0]!r}")
    if nargs is not None and len(toks) - 1 != nargs:
        raise ParseError(lineno, f"{expect} takes {nargs} argument(s), got {len(toks) - 1}")
    return lineno, toks[1:]


def _row(lines, what: str, N: int, domain: str):
    try:
        lineno, toks = next(lines)
    except StopIteration:
        raise DimensionMismatch(f"unexpected end of file while reading {what}") from None
    if len(toks) != N or not _looks_numeric(toks[0]):
        raise DimensionMismatch(f"line {lineno}: {what} should have {N} numeric entries, got {' '.join(toks)!r}")
    return [_number(t, domain, lineno) for t in toks]


def _looks_numeric(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_instance(text: str) -> QPInstance:
    """Parse the text format; raises :class:`ParseError` or a validation error."""
    lines = _content_lines(text)
    lineno, args = _keyword(lines, "NQP", 1)
    if args[0] != FORMAT_VERSION:
        raise ParseError(lineno, f"unsupported format version {args[0]!r}")
    lineno, args = _keyword(lines, "DOMAIN", 1)
    domain = args[0].lower()
    if domain not in (INT, REAL):
        raise ParseError(lineno, f"DOMAIN must be 'int' or 'real', got {args[0]!r}")
    lineno, args = _keyword(lines, "PSD", 1)
    if args[0].lower() not in ("declared", "unknown"):
        raise ParseError(lineno, f"PSD must be 'declared' or 'unknown', got {args[0]!r}")
    psd = args[0].lower() == "declared"
    lineno, args = _keyword(lines, "N", 1)
    N = _number(args[0], INT, lineno)
    if N < 1:
        raise ParseError(lineno, f"N must be positive, got {N}")
    lineno, args = _keyword(lines, "S")
    if len(args) < 2 or args[1] != ":":
        raise ParseError(lineno, "S line must read 'S <count> : <values...>'")
    count = _number(args[0], INT, lineno)
    values = [_number(t, INT, lineno) for t in args[2:]]
    if count != len(values):
        raise DimensionMismatch(f"line {lineno}: S declares {count} values but lists {len(values)}")
    S = LevelSet(tuple(values))
    problems = S.problems()
    if problems:
        raise InvalidInstance(f"line {lineno}: " + "; ".join(problems))

    _keyword(lines, "Q", 0)
    Q = [_row(lines, f"Q row {i + 1}", N, domain) for i in range(N)]
    _keyword(lines, "C", 0)
    c = _row(lines, "C", N, domain)
    extra = next(lines, None)
    if extra is not None:
        raise ParseError(extra[0], f"unexpected trailing content {' '.join(extra[1])!r}")

    for i in range(N):
        for j in range(i + 1, N):
            if Q[i][j] != Q[j][i]:
                raise InvalidInstance(f"Q is not symmetric: Q[{i}][{j}] = {Q[i][j]} != Q[{j}][{i}] = {Q[j][i]}")
    return QPInstance(Q, c, S, domain, psd)


def _fmt(x, domain: str) -> str:
    return str(int(x)) if domain == INT else repr(float(x))


def _fmt_exact(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    return str(x)


def serialize_instance(inst: QPInstance, certificate: ReductionCertificate | None = None,
                       comments: list[str] | None = None) -> str:
    d = inst.domain
    out = [
        f"NQP {FORMAT_VERSION}",
        f"DOMAIN {d}",
        f"PSD {'declared' if inst.psd_declared else 'unknown'}",
        f"N {inst.N}",
        f"S {inst.n} : " + " ".join(map(str, inst.S)),
        "Q",
    ]
    out += [" ".join(_fmt(x, d) for x in row) for row in inst.Q]
    out += ["C", " ".join(_fmt(x, d) for x in inst.c)]
    for line in comments or []:
        out.append(f"# {line}")
    if certificate is not None:
        out.append(f"# {CERT_HEADER}")
        out += [f"# {k} {_fmt_exact(v)}" for k, v in certificate.items()]
    return "\n".join(out) + "\n"


_CERT_INT_FIELDS = {"s1", "s2", "scale", "offset", "s_star", "s_2star", "L_G", "M"}
_CERT_ALIASES = {"Lambda": "lam"}


def parse_certificate(text: str) -> ReductionCertificate | None:
    """Recover a certificate from the comment block, or None if absent."""
    fields, inside = {}, False
    for raw in text.splitlines():
        s = raw.strip()
        if not s.startswith("#"):
            continue
        toks = s[1:].split()
        if not toks:
            continue
        if toks[0] == CERT_HEADER:
            inside = True
            continue
        if inside and len(toks) == 2:
            key = _CERT_ALIASES.get(toks[0], toks[0])
            if key == "d":
                continue
            val = Fraction(toks[1])
            fields[key] = int(val) if key in _CERT_INT_FIELDS else (
                val.numerator if val.denominator == 1 else val)
    return ReductionCertificate(**fields) if inside else None


def read_instance(path) -> QPInstance:
    return parse_instance(Path(path).read_text())


def write_instance(path, inst: QPInstance, certificate: ReductionCertificate | None = None) -> None:
    Path(path).write_text(serialize_instance(inst, certificate))

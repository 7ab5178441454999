"""Expression AST, grammar, printer, and the symbolic operations.

The grammar: integers and ratios a/b, identifiers, + - * / ^ with the usual
precedence, unary minus, and the functions exp( ) ln( ) sqrt( ) sinh( )
cosh( ).  Reserved symbols: x0..x3 p0..p3 kappa kappabar m, with psq and xsq
as sugar for the spatial squares p.p and x.x.  Abstract two-argument
functions (f, g, ...) are declared per environment; their partial
derivatives print and parse as name_d1 / name_d2 suffixes.

Expressions are immutable; `normalize` maps them to the canonical
rational-atom form and back to a (parseable) canonical tree, so structural
equality of normalized trees decides symbolic equality.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import vars as V
from . import polyops as P
from . import ratfunc as R
from .ratfunc import RatFunc, KpalgError

BUILTIN_FUNCS = ("exp", "ln", "sqrt", "sinh", "cosh")


class ParseError(KpalgError):
    def __init__(self, message, line=1, col=0):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownIdentifierError(ParseError):
    pass


# -- AST ------------------------------------------------------------------------

class Expr:
    __slots__ = ()

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction


@dataclass(frozen=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    args: tuple


@dataclass(frozen=True)
class Mul(Expr):
    args: tuple


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True)
class App(Expr):
    func: str
    args: tuple


def num(v) -> Num:
    return Num(Fraction(v))


# -- symbol environments -----------------------------------------------------------

_FUNC_SUFFIX = re.compile(r"^(?P<base>.*?)(?P<suffix>(?:_d[0-9])+)$")


@dataclass
class SymbolEnv:
    """Resolution context for identifiers: values, abstract functions, sugar."""

    name: str = "base"
    symbols: dict = field(default_factory=dict)      # identifier -> RatFunc
    functions: dict = field(default_factory=dict)    # abstract func name -> arity
    sugar: dict = field(default_factory=dict)        # identifier -> tuple of vids (sum of squares)

    def child(self, name: str) -> "SymbolEnv":
        return SymbolEnv(name, dict(self.symbols), dict(self.functions), dict(self.sugar))

    def define(self, name: str, value) -> "SymbolEnv":
        self.symbols[name] = R.as_ratfunc(value) if not isinstance(value, RatFunc) else value
        return self

    def define_symbol(self, name: str) -> RatFunc:
        value = R.sym(V.register_base(name))
        self.symbols[name] = value
        return value

    def define_function(self, name: str, arity: int) -> "SymbolEnv":
        self.functions[name] = arity
        return self

    def known_names(self):
        return sorted(set(self.symbols) | set(self.functions) | set(self.sugar))

    def resolve(self, name: str) -> RatFunc:
        got = self.symbols.get(name)
        if got is not None:
            return got
        got = self.sugar.get(name)
        if got is not None:
            total = R.ZERO
            for vid in got:
                s = R.sym(vid)
                total = total + s * s
            return total
        raise UnknownIdentifierError(
            f"unknown identifier '{name}'; registered: {', '.join(self.known_names())}")

    def function_arity(self, name: str) -> Optional[tuple]:
        """Returns (base_name, arity, orders) if name is a declared function."""
        base, orders = name, None
        mt = _FUNC_SUFFIX.match(name)
        if mt and mt.group("base") in self.functions:
            base = mt.group("base")
        if base not in self.functions:
            return None
        arity = self.functions[base]
        counts = [0] * arity
        if base != name:
            for d in re.findall(r"_d([0-9])", name[len(base):]):
                i = int(d) - 1
                if i >= arity:
                    return None
                counts[i] += 1
        return base, arity, tuple(counts)


_ENV_LOCK = threading.RLock()
_BASE_ENV: Optional[SymbolEnv] = None
_SCALAR_ENVS: dict = {}


def base_env() -> SymbolEnv:
    """Phase-space environment: x, p, parameters; psq/xsq expand to squares."""
    global _BASE_ENV
    with _ENV_LOCK:
        if _BASE_ENV is None:
            env = SymbolEnv("phase-space")
            for vid in (*V.X, *V.P, V.KAPPA, V.KAPPABAR, V.MASS):
                env.symbols[V.name_of(vid)] = R.sym(vid)
            env.sugar["psq"] = V.P[1:]
            env.sugar["xsq"] = V.X[1:]
            _BASE_ENV = env
        return _BASE_ENV


def scalar_env(kind: str) -> SymbolEnv:
    """Two-variable scalar environment for defining functions and coefficients.

    kind "momentum": p0, psq and the deformed pair P0, Psq.
    kind "spacetime": x0, xsq and the deformed pair X0bar, Xsqbar.
    """
    with _ENV_LOCK:
        got = _SCALAR_ENVS.get(kind)
        if got is not None:
            return got
        env = SymbolEnv(f"scalar-{kind}")
        for vid in (V.KAPPA, V.KAPPABAR, V.MASS):
            env.symbols[V.name_of(vid)] = R.sym(vid)
        if kind == "momentum":
            names = ("p0", "psq", "P0", "Psq")
        elif kind == "spacetime":
            names = ("x0", "xsq", "X0bar", "Xsqbar")
        else:
            raise ValueError(f"unknown scalar kind {kind!r}")
        for n in names:
            env.define_symbol(n)
        _SCALAR_ENVS[kind] = env
        return env


# -- tokenizer / parser ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<int>[0-9]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        if text[pos] == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = mt.start(mt.lastgroup) - line_start + 1
        kind = mt.lastgroup
        tokens.append((kind, mt.group(kind), line, col))
        pos = mt.end()
    tokens.append(("end", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens, env: SymbolEnv):
        self.tokens = tokens
        self.i = 0
        self.env = env

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if kind and tok[0] != kind or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or kind}, found {tok[1]!r}", tok[2], tok[3])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected trailing input {tok[1]!r}", tok[2], tok[3])
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else _negate(t))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            f = self.unary()
            factors.append(f if op == "*" else Pow(f, -1))
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return _negate(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[1] == "^":
            tok = self.take()
            exp = self.unary()
            k = _integer_value(exp)
            if k is None:
                raise ParseError("exponent must be an integer", tok[2], tok[3])
            return Pow(base, k)
        return base

    def primary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "int":
            self.take()
            return Num(Fraction(int(tok[1])))
        if tok[0] == "ident":
            self.take()
            name = tok[1]
            if self.peek()[1] == "(":
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.take("op", ")")
                if name in BUILTIN_FUNCS:
                    if len(args) != 1:
                        raise ParseError(f"{name} takes one argument", tok[2], tok[3])
                elif self.env.function_arity(name) is None:
                    raise UnknownIdentifierError(
                        f"unknown function '{name}'; registered: "
                        f"{', '.join(sorted(self.env.functions) or ('none',))}",
                        tok[2], tok[3])
                else:
                    _, arity, _ = self.env.function_arity(name)
                    if len(args) != arity:
                        raise ParseError(f"{name} takes {arity} argument(s)", tok[2], tok[3])
                return App(name, tuple(args))
            if name not in self.env.symbols and name not in self.env.sugar:
                raise UnknownIdentifierError(
                    f"unknown identifier '{name}'; registered: "
                    f"{', '.join(self.env.known_names())}", tok[2], tok[3])
            return Sym(name)
        if tok[1] == "(":
            self.take()
            e = self.expr()
            self.take("op", ")")
            return e
        raise ParseError(f"unexpected token {tok[1]!r}", tok[2], tok[3])


def _negate(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    if isinstance(e, Mul):
        return Mul((Num(Fraction(-1)), *e.args))
    return Mul((Num(Fraction(-1)), e))


def _integer_value(e: Expr):
    if isinstance(e, Num) and e.value.denominator == 1:
        return int(e.value)
    if isinstance(e, Mul) and len(e.args) == 2:
        a, b = e.args
        if isinstance(a, Num) and isinstance(b, Num):
            v = a.value * b.value
            if v.denominator == 1:
                return int(v)
    return None


def parse(text: str, env: Optional[SymbolEnv] = None) -> Expr:
    """Parse an expression string, validating identifiers against env."""
    env = env or base_env()
    return _Parser(_tokenize(text), env).parse()


# -- conversion to canonical form ----------------------------------------------------

def to_ratfunc(e: Expr, env: Optional[SymbolEnv] = None) -> RatFunc:
    env = env or base_env()
    if isinstance(e, Num):
        return R.const(e.value)
    if isinstance(e, Sym):
        return env.resolve(e.name)
    if isinstance(e, Add):
        total = R.ZERO
        for a in e.args:
            total = total + to_ratfunc(a, env)
        return total
    if isinstance(e, Mul):
        total = R.ONE
        for a in e.args:
            total = total * to_ratfunc(a, env)
        return total
    if isinstance(e, Pow):
        return to_ratfunc(e.base, env) ** e.exp
    if isinstance(e, App):
        args = tuple(to_ratfunc(a, env) for a in e.args)
        if e.func == "exp":
            return R.exp_of(args[0])
        if e.func == "ln":
            return R.ln_of(args[0])
        if e.func == "sqrt":
            return R.sqrt_of(args[0])
        if e.func == "sinh":
            return R.sinh_of(args[0])
        if e.func == "cosh":
            return R.cosh_of(args[0])
        spec = env.function_arity(e.func)
        if spec is None:
            raise UnknownIdentifierError(f"unknown function '{e.func}'")
        base, _, orders = spec
        return R.func_of(base, args, orders)
    raise TypeError(f"not an expression: {e!r}")


def _atom_expr(vid: int, exp, pretty: bool) -> Expr:
    info = V.info(vid)
    if info.kind == V.BASE:
        base = Sym(info.name)
        return base if exp == 1 else Pow(base, exp)
    if pretty and not info.name.startswith("_"):
        base = Sym(info.name)
        if info.kind == V.EXP and isinstance(exp, Fraction):
            return App("exp", (expr_of_ratfunc(info.data * exp, pretty=pretty),))
        return base if exp == 1 else Pow(base, exp)
    if info.kind == V.RADICAL:
        base = App("sqrt", (expr_of_ratfunc(info.data, pretty=pretty),))
        return base if exp == 1 else Pow(base, exp)
    if info.kind == V.EXP:
        return App("exp", (expr_of_ratfunc(info.data * Fraction(exp), pretty=pretty),))
    if info.kind == V.LN:
        base = App("ln", (expr_of_ratfunc(info.data, pretty=pretty),))
        return base if exp == 1 else Pow(base, exp)
    if info.kind == V.FUNC:
        name, args, orders = info.data
        suffix = "".join(f"_d{i + 1}" * n for i, n in enumerate(orders))
        base = App(name + suffix, tuple(expr_of_ratfunc(a, pretty=pretty) for a in args))
        return base if exp == 1 else Pow(base, exp)
    raise AssertionError(info.kind)


def _poly_expr(p: dict, pretty: bool) -> Expr:
    if not p:
        return Num(Fraction(0))
    terms = []
    for mono in sorted(p, key=P.MONO_KEY, reverse=True):
        c = p[mono]
        factors = []
        if c != 1 or not mono:
            factors.append(Num(c))
        for vid, e in mono:
            factors.append(_atom_expr(vid, e, pretty))
        terms.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def expr_of_ratfunc(rf: RatFunc, pretty: bool = False) -> Expr:
    nume = _poly_expr(rf.num, pretty)
    if rf.den == P.ONE:
        return nume
    dene = _poly_expr(rf.den, pretty)
    return Mul((nume, Pow(dene, -1)))


# -- printing -----------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _render(e: Expr, prec: int) -> str:
    if isinstance(e, Num):
        v = e.value
        if v.denominator == 1:
            s = str(v.numerator)
            need = _PREC_UNARY if v < 0 else _PREC_ATOM
        else:
            s = f"{v.numerator}/{v.denominator}"
            need = _PREC_MUL
        return f"({s})" if prec > need else s
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, App):
        inner = ", ".join(_render(a, _PREC_ADD) for a in e.args)
        return f"{e.func}({inner})"
    if isinstance(e, Add):
        parts = [_render(e.args[0], _PREC_ADD)]
        for a in e.args[1:]:
            s = _render(a, _PREC_ADD)
            parts.append(f" - {s[1:]}" if s.startswith("-") else f" + {s}")
        s = "".join(parts)
        return f"({s})" if prec > _PREC_ADD else s
    if isinstance(e, Mul):
        sign = ""
        nums, dens = [], []
        for a in e.args:
            if isinstance(a, Num) and a.value == -1 and len(e.args) > 1:
                sign = "-" if not sign else ""
                continue
            if isinstance(a, Pow) and a.exp < 0:
                dens.append(a.base if a.exp == -1 else Pow(a.base, -a.exp))
            else:
                nums.append(a)
        top = "*".join(_render(a, _PREC_MUL + 1) for a in nums) or "1"
        if dens:
            bottom = "*".join(_render(a, _PREC_MUL + 1) for a in dens)
            if len(dens) > 1:
                bottom = f"({bottom})"
            s = f"{sign}{top}/{bottom}"
        else:
            s = f"{sign}{top}"
        return f"({s})" if prec > _PREC_MUL or (sign and prec >= _PREC_MUL) else s
    if isinstance(e, Pow):
        if e.exp < 0:
            s = f"1/{_render(Pow(e.base, -e.exp), _PREC_POW + 1)}"
            return f"({s})" if prec > _PREC_MUL else s
        s = f"{_render(e.base, _PREC_POW + 1)}^{e.exp}"
        return f"({s})" if prec > _PREC_POW else s
    raise TypeError(f"not an expression: {e!r}")


def to_string(e: Expr) -> str:
    return _render(e, _PREC_ADD)


def format_ratfunc(rf: RatFunc, pretty: bool = True) -> str:
    return to_string(expr_of_ratfunc(rf, pretty=pretty))


# -- public operations ----------------------------------------------------------------

def _coerce(e, env: Optional[SymbolEnv] = None) -> RatFunc:
    if isinstance(e, RatFunc):
        return e
    if isinstance(e, str):
        return to_ratfunc(parse(e, env), env)
    if isinstance(e, Expr):
        return to_ratfunc(e, env)
    if isinstance(e, (int, Fraction)):
        return R.const(e)
    raise TypeError(f"not an expression: {e!r}")


def normalize(e, env: Optional[SymbolEnv] = None, pretty: bool = False) -> Expr:
    """Canonical form; normalize(normalize(e)) == normalize(e) structurally."""
    return expr_of_ratfunc(_coerce(e, env), pretty=pretty)


def diff(e, wrt, env: Optional[SymbolEnv] = None) -> Expr:
    rf = _coerce(e, env)
    wrt_vid = V.lookup(wrt) if isinstance(wrt, str) else wrt
    return expr_of_ratfunc(R.diff(rf, wrt_vid))


def subst(e, bindings: dict, env: Optional[SymbolEnv] = None) -> Expr:
    """Simultaneous substitution; keys may be symbols or the psq/xsq sugar."""
    env = env or base_env()
    rf = _coerce(e, env)
    vid_map = {}
    sugar_map = []
    for key, value in bindings.items():
        val = _coerce(value, env)
        if isinstance(key, str) and key in env.sugar:
            sugar_map.append((env.sugar[key], val))
            continue
        vid = V.lookup(key) if isinstance(key, str) else key
        vid_map[vid] = val
    if vid_map:
        R.check_acyclic(vid_map)
        rf = R.subst(rf, vid_map)
    for vids, val in sugar_map:
        # rewrite the last square through the rest: vlast^2 -> val - sum others^2
        rest = R.ZERO
        for vv in vids[:-1]:
            s = R.sym(vv)
            rest = rest + s * s
        rf = R.eliminate_square(rf, vids[-1], val - rest)
    return expr_of_ratfunc(rf)

"""Numeric oracle: point sampling, plain and dual-number evaluation.

Two independent evaluation routes back every symbolic verdict: raw
expression trees evaluate node by node (`eval_expr`), and canonical forms
evaluate through their atom definitions (`eval_ratfunc`).  Dual numbers give
exact directional derivatives for cross-checking symbolic differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import Callable, Optional

from . import vars as V
from . import expr as E
from .ratfunc import RatFunc, KpalgError

FD_STEP = 1e-5  # central-difference step for abstract function partials


class DomainError(KpalgError):
    pass


# -- dual numbers ---------------------------------------------------------------

@dataclass(frozen=True)
class Dual:
    """a + b*eps with eps^2 = 0; carries one directional derivative."""

    a: float
    b: float = 0.0

    def __add__(self, o):
        o = _dual(o)
        return Dual(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o):
        o = _dual(o)
        return Dual(self.a - o.a, self.b - o.b)

    def __rsub__(self, o):
        return _dual(o) - self

    def __mul__(self, o):
        o = _dual(o)
        return Dual(self.a * o.a, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _dual(o)
        return Dual(self.a / o.a, (self.b * o.a - self.a * o.b) / (o.a * o.a))

    def __rtruediv__(self, o):
        return _dual(o) / self

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __pow__(self, k: int):
        if k == 0:
            return Dual(1.0)
        if k < 0:
            return Dual(1.0) / self ** (-k)
        out = self
        for _ in range(k - 1):
            out = out * self
        return out


def _dual(x) -> Dual:
    if isinstance(x, Dual):
        return x
    return Dual(float(x))


def dual_sqrt(x: Dual) -> Dual:
    r = math.sqrt(x.a)
    return Dual(r, x.b / (2.0 * r))


def dual_exp(x: Dual) -> Dual:
    v = math.exp(x.a)
    return Dual(v, x.b * v)


def dual_log(x: Dual) -> Dual:
    return Dual(math.log(x.a), x.b / x.a)


def dual_sinh(x: Dual) -> Dual:
    return Dual(math.sinh(x.a), x.b * math.cosh(x.a))


def dual_cosh(x: Dual) -> Dual:
    return Dual(math.cosh(x.a), x.b * math.sinh(x.a))


# -- phase points -----------------------------------------------------------------

@dataclass
class PhasePoint:
    """Numeric assignment for the phase-space symbols and parameters.

    Extra entries (abstract generators, series variables) ride along in the
    same mapping; everything is dimensionless.
    """

    values: dict = field(default_factory=dict)
    shell: bool = False

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def env(self) -> dict:
        out = {}
        for name, val in self.values.items():
            vid = V.maybe_lookup(name)
            if vid is not None:
                out[vid] = val
        return out

    def with_values(self, **extra) -> "PhasePoint":
        vals = dict(self.values)
        vals.update(extra)
        return PhasePoint(vals, self.shell)


def sample_phase_point(rng: Random, shell: bool = False) -> PhasePoint:
    """Draw a domain-valid point.

    Ranges: m in (0.1, 2); spatial p in (-1, 1); p0 on the positive shell or
    in (1, 3); x in (-1, 1), rejected until the dual radical argument stays
    above 0.25 and kappabar*x0 + W above 0.25; kappa, kappabar in (0.5, 2).
    """
    m = rng.uniform(0.1, 2.0)
    kappa = rng.uniform(0.5, 2.0)
    kappabar = rng.uniform(0.5, 2.0)
    p = [rng.uniform(-1.0, 1.0) for _ in range(3)]
    psq = sum(v * v for v in p)
    p0 = math.sqrt(m * m + psq) if shell else rng.uniform(1.0, 3.0)
    while True:
        x = [rng.uniform(-1.0, 1.0) for _ in range(4)]
        arg = kappabar ** 2 * (x[0] ** 2 - x[1] ** 2 - x[2] ** 2 - x[3] ** 2) + 1.0
        if arg <= 0.25:
            continue
        w = math.sqrt(arg)
        if kappabar * x[0] + w > 0.25:
            break
    values = {
        "x0": x[0], "x1": x[1], "x2": x[2], "x3": x[3],
        "p0": p0, "p1": p[0], "p2": p[1], "p3": p[2],
        "kappa": kappa, "kappabar": kappabar, "m": m,
    }
    return PhasePoint(values, shell)


def sample_point_for(rng: Random, names, shell: bool = False,
                     extra_range=(0.3, 1.4)) -> PhasePoint:
    """A phase point extended with values for any non-reserved symbols."""
    pt = sample_phase_point(rng, shell=shell)
    for name in sorted(names):
        if name not in pt.values:
            pt.values[name] = rng.uniform(*extra_range)
    return pt


# -- evaluation --------------------------------------------------------------------

def _call_func(funcs: dict, name: str, orders, args):
    """Evaluate an abstract function application, derivatives by differences."""
    suffix = "".join(f"_d{i + 1}" * n for i, n in enumerate(orders))
    explicit = funcs.get(name + suffix) if funcs else None
    if explicit is not None:
        return explicit(*args)
    fn = funcs.get(name) if funcs else None
    if fn is None:
        raise DomainError(f"no numeric binding for abstract function '{name}'")
    if not any(orders):
        return fn(*args)
    i = next(j for j, n in enumerate(orders) if n)
    lower = tuple(n - 1 if j == i else n for j, n in enumerate(orders))
    up = list(args)
    dn = list(args)
    up[i] += FD_STEP
    dn[i] -= FD_STEP
    return (_call_func(funcs, name, lower, tuple(up))
            - _call_func(funcs, name, lower, tuple(dn))) / (2 * FD_STEP)


def eval_expr(e, env: dict, funcs: Optional[dict] = None,
              symbol_env=None) -> float:
    """Evaluate a raw expression tree (no normalization involved)."""
    if isinstance(e, str):
        e = E.parse(e, symbol_env)
    if isinstance(e, E.Num):
        return float(e.value)
    if isinstance(e, E.Sym):
        if e.name in env:
            return float(env[e.name])
        if symbol_env is not None and e.name in symbol_env.sugar:
            return sum(float(env[V.name_of(v)]) ** 2 for v in symbol_env.sugar[e.name])
        raise DomainError(f"no value for symbol '{e.name}'")
    if isinstance(e, E.Add):
        return sum(eval_expr(a, env, funcs, symbol_env) for a in e.args)
    if isinstance(e, E.Mul):
        out = 1.0
        for a in e.args:
            out *= eval_expr(a, env, funcs, symbol_env)
        return out
    if isinstance(e, E.Pow):
        return eval_expr(e.base, env, funcs, symbol_env) ** e.exp
    if isinstance(e, E.App):
        if e.func in E.BUILTIN_FUNCS:
            v = eval_expr(e.args[0], env, funcs, symbol_env)
            if e.func == "sqrt":
                if v <= 0:
                    raise DomainError(f"sqrt argument not positive: {E.to_string(e)} = {v}")
                return math.sqrt(v)
            if e.func == "ln":
                if v <= 0:
                    raise DomainError(f"ln argument not positive: {E.to_string(e)} = {v}")
                return math.log(v)
            return getattr(math, e.func)(v)
        mt = E._FUNC_SUFFIX.match(e.func)
        base = mt.group("base") if mt and funcs and mt.group("base") in funcs else e.func
        orders = [0] * len(e.args)
        if base != e.func:
            for d in E._FUNC_SUFFIX.match(e.func).group("suffix").split("_d")[1:]:
                orders[int(d) - 1] += 1
        args = tuple(eval_expr(a, env, funcs, symbol_env) for a in e.args)
        return _call_func(funcs or {}, base, tuple(orders), args)
    raise TypeError(f"not an expression: {e!r}")


class _Evaluator:
    """Evaluates canonical forms; atom values cached per point."""

    def __init__(self, env: dict, funcs: Optional[dict], dual_wrt: Optional[int] = None):
        self.env = env
        self.funcs = funcs or {}
        self.dual_wrt = dual_wrt
        self.cache: dict = {}

    def var(self, vid: int):
        got = self.cache.get(vid)
        if got is not None:
            return got
        info = V.info(vid)
        if info.kind == V.BASE:
            if vid not in self.env:
                raise DomainError(f"no value for symbol '{info.name}'")
            base = float(self.env[vid])
            out = Dual(base, 1.0 if vid == self.dual_wrt else 0.0) \
                if self.dual_wrt is not None else base
        elif info.kind == V.RADICAL:
            arg = self.ratfunc(info.data)
            bad = arg.a if isinstance(arg, Dual) else arg
            if bad <= 0:
                raise DomainError(
                    f"sqrt argument not positive in atom {info.name}: {bad}")
            out = dual_sqrt(arg) if isinstance(arg, Dual) else math.sqrt(arg)
        elif info.kind == V.EXP:
            arg = self.ratfunc(info.data)
            out = dual_exp(arg) if isinstance(arg, Dual) else math.exp(arg)
        elif info.kind == V.LN:
            arg = self.ratfunc(info.data)
            bad = arg.a if isinstance(arg, Dual) else arg
            if bad <= 0:
                raise DomainError(
                    f"ln argument not positive in atom {info.name}: {bad}")
            out = dual_log(arg) if isinstance(arg, Dual) else math.log(arg)
        elif info.kind == V.FUNC:
            name, args, orders = info.data
            vals = [self.ratfunc(a) for a in args]
            if self.dual_wrt is None:
                out = _call_func(self.funcs, name, orders, tuple(vals))
            else:
                plain = [v.a if isinstance(v, Dual) else v for v in vals]
                value = _call_func(self.funcs, name, orders, tuple(plain))
                deriv = 0.0
                for i, v in enumerate(vals):
                    dv = v.b if isinstance(v, Dual) else 0.0
                    if dv:
                        bumped = tuple(n + (1 if j == i else 0) for j, n in enumerate(orders))
                        deriv += dv * _call_func(self.funcs, name, bumped, tuple(plain))
                out = Dual(value, deriv)
        else:
            raise AssertionError(info.kind)
        self.cache[vid] = out
        return out

    def poly(self, p: dict):
        total = Dual(0.0) if self.dual_wrt is not None else 0.0
        for m, c in p.items():
            term = Dual(float(c)) if self.dual_wrt is not None else float(c)
            for vid, e in m:
                base = self.var(vid)
                if isinstance(e, Fraction):
                    if isinstance(base, Dual):
                        ln_b = dual_log(base)
                        base = dual_exp(Dual(ln_b.a * float(e), ln_b.b * float(e)))
                        term = term * base
                    else:
                        term = term * math.exp(math.log(base) * float(e))
                else:
                    term = term * base ** e
            total = total + term
        return total

    def ratfunc(self, rf: RatFunc):
        n = self.poly(rf.num)
        d = self.poly(rf.den)
        bad = d.a if isinstance(d, Dual) else d
        if bad == 0:
            raise DomainError("denominator vanished at the sampled point")
        return n / d


def eval_ratfunc(rf: RatFunc, env: dict, funcs: Optional[dict] = None) -> float:
    """Evaluate a canonical form numerically (env keyed by variable id)."""
    return _Evaluator(env, funcs).ratfunc(rf)


def eval_ratfunc_dual(rf: RatFunc, env: dict, wrt: int,
                      funcs: Optional[dict] = None) -> Dual:
    """Evaluate with a dual seed on `wrt`: returns value and d/d(wrt)."""
    return _Evaluator(env, funcs, dual_wrt=wrt).ratfunc(rf)


def evaluate(e, point: PhasePoint, mode: str = "plain", wrt: Optional[str] = None,
             funcs: Optional[dict] = None, symbol_env=None):
    """Public evaluation entry: plain value or (value, derivative) pair."""
    if mode == "plain":
        if isinstance(e, RatFunc):
            return eval_ratfunc(e, point.env(), funcs)
        return eval_expr(e, point.values, funcs, symbol_env)
    if mode == "dual":
        if wrt is None:
            raise ValueError("dual mode needs wrt=<symbol>")
        rf = e if isinstance(e, RatFunc) else E.to_ratfunc(
            E.parse(e, symbol_env) if isinstance(e, str) else e, symbol_env)
        d = eval_ratfunc_dual(rf, point.env(), V.lookup(wrt), funcs)
        return d.a, d.b
    raise ValueError(f"unknown evaluation mode {mode!r}")

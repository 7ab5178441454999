"""Canonical rational-function arithmetic over symbols and atoms.

A RatFunc is a reduced fraction num/den of multivariate polynomials over Q in
plain symbols and atom variables.  Canonical form guarantees:

  * no negative exponents (unit atoms are cleared into num/den),
  * radical atoms appear with degree <= 1 (squares rewritten by side relation),
  * no radical atoms in the denominator except via the final pass below,
  * gcd(num, den) = 1 with den's leading coefficient = 1,
  * a final pass that moves a lone radical factor into the denominator when
    the denominator is the radical's square (so 1/W stays 1/W),

which makes structural equality decide symbolic equality: an expression is
zero iff its canonical numerator is the zero polynomial.
"""

from __future__ import annotations

import math
import threading
from contextvars import ContextVar
from fractions import Fraction

from . import vars as V
from .kernel import padd, psub, pneg, pscale, pmul, pmul_mono, ppow
from . import polyops as P

_STRICT_ATOMS: ContextVar[bool] = ContextVar("kpalg_strict_atoms", default=False)
_SIZE_BUDGET: ContextVar[int] = ContextVar("kpalg_size_budget", default=2_000_000)

_DERIV_CACHE: dict = {}
_CLOSURE_CACHE: dict = {}
_CACHE_LOCK = threading.RLock()


class KpalgError(Exception):
    pass


class DivisionByZeroError(KpalgError):
    pass


class UnregisteredAtomError(KpalgError):
    pass


class UnsupportedTranscendentalError(KpalgError):
    pass


class BudgetExceededError(KpalgError):
    pass


class NonIntegerExponentError(KpalgError):
    pass


class CyclicBindingError(KpalgError):
    pass


def set_strict_atoms(flag: bool):
    return _STRICT_ATOMS.set(flag)


def reset_strict_atoms(token):
    _STRICT_ATOMS.reset(token)


def set_size_budget(n: int):
    return _SIZE_BUDGET.set(n)


def _check_budget(*polys):
    budget = _SIZE_BUDGET.get()
    if sum(len(p) for p in polys) > budget:
        raise BudgetExceededError(f"normal form exceeded {budget} monomials")


def _intern_atom(kind, key, data, name_hint=None):
    if _STRICT_ATOMS.get() and (kind, key) not in V._ATOMS:
        raise UnregisteredAtomError(f"{kind} atom not registered: {key!r}")
    return V.intern_atom(kind, key, data, name_hint)


class RatFunc:
    __slots__ = ("num", "den", "_key", "_hash")

    def __init__(self, num: dict, den: dict):
        rf = make(num, den)
        self.num = rf.num
        self.den = rf.den
        self._key = None
        self._hash = None

    # -- identity -------------------------------------------------------------
    def key(self):
        if self._key is None:
            self._key = (
                tuple(sorted(self.num.items())),
                tuple(sorted(self.den.items())),
            )
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self is other or self.key() == other.key()

    def __repr__(self):
        return f"RatFunc({self.num!r}, {self.den!r})"

    # -- predicates -------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def is_one(self) -> bool:
        return self.num == P.ONE and self.den == P.ONE

    def is_rational(self) -> bool:
        return P.is_const(self.num) and P.is_const(self.den)

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("not a rational constant")
        if not self.num:
            return Fraction(0)
        return P.const_value(self.num) / P.const_value(self.den)

    def vars(self) -> set:
        return P.pvars(self.num) | P.pvars(self.den)

    def free_vars(self) -> frozenset:
        """All variable ids this value depends on, through atom definitions."""
        out = frozenset()
        for v in self.vars():
            out |= _closure(v)
        return out

    # -- arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = as_ratfunc(other)
        if self.den == other.den:
            return make(padd(self.num, other.num), self.den)
        return make(
            padd(pmul(self.num, other.den), pmul(other.num, self.den)),
            pmul(self.den, other.den),
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = as_ratfunc(other)
        if self.den == other.den:
            return make(psub(self.num, other.num), self.den)
        return make(
            psub(pmul(self.num, other.den), pmul(other.num, self.den)),
            pmul(self.den, other.den),
        )

    def __rsub__(self, other):
        return as_ratfunc(other) - self

    def __neg__(self):
        return _raw(pneg(self.num), self.den)

    def __mul__(self, other):
        other = as_ratfunc(other)
        return make(pmul(self.num, other.num), pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_ratfunc(other)
        if other.is_zero():
            raise DivisionByZeroError("division by identically zero expression")
        return make(pmul(self.num, other.den), pmul(self.den, other.num))

    def __rtruediv__(self, other):
        return as_ratfunc(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise NonIntegerExponentError(f"integer exponent required, got {k!r}")
        if k == 0:
            return ONE
        if k < 0:
            if self.is_zero():
                raise DivisionByZeroError("zero to a negative power")
            return make(ppow(self.den, -k), ppow(self.num, -k))
        return make(ppow(self.num, k), ppow(self.den, k))


def _raw(num: dict, den: dict) -> RatFunc:
    out = RatFunc.__new__(RatFunc)
    out.num = num
    out.den = den
    out._key = None
    out._hash = None
    return out


def as_ratfunc(x) -> RatFunc:
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, (int, Fraction)):
        return const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to RatFunc")


def const(c) -> RatFunc:
    return _raw(P.pconst(c), dict(P.ONE))


ZERO = const(0)
ONE = const(1)


def sym(vid_or_name) -> RatFunc:
    vid = vid_or_name if isinstance(vid_or_name, int) else V.lookup(vid_or_name)
    return _raw(P.pvar(vid), dict(P.ONE))


# -- canonicalization -----------------------------------------------------------

def _clear_units(num: dict, den: dict):
    """Multiply num and den by a monomial so every exponent is >= 0."""
    mins: dict = {}
    for p in (num, den):
        for m in p:
            for v, e in m:
                if e < 0 and e < mins.get(v, 0):
                    mins[v] = e
    if not mins:
        return num, den
    shift = tuple(sorted((v, -e) for v, e in mins.items()))
    return (
        pmul_mono(num, shift, Fraction(1)),
        pmul_mono(den, shift, Fraction(1)),
    )


def _radical_atoms_in(p: dict):
    out = set()
    for m in p:
        for v, _ in m:
            if V.kind_of(v) == V.RADICAL:
                out.add(v)
    return sorted(out)


def _reduce_radical_squares(p: dict) -> RatFunc:
    """Rewrite every radical atom power a**(2k+r) -> (a^2)**k * a**r."""
    target = None
    for m in p:
        for v, e in m:
            if e >= 2 and V.kind_of(v) == V.RADICAL:
                target = v
                break
        if target is not None:
            break
    if target is None:
        return _raw(p, dict(P.ONE))
    square: RatFunc = V.info(target).data
    plain: dict = {}
    acc = ZERO
    for m, c in p.items():
        e = P.mono_exp(m, target)
        if isinstance(e, int) and e >= 2:
            k, r = divmod(e, 2)
            rest = tuple((vv, ee) for vv, ee in m if vv != target)
            if r:
                rest = P.mono_mul(rest, ((target, 1),))
            piece = square ** k
            acc = acc + _raw(pmul_mono(piece.num, rest, c), piece.den)
        else:
            plain[m] = c
    return acc + _reduce_radical_squares(plain)


def _split_by_var(p: dict, v: int):
    """p = c0 + c1*v for a variable of degree <= 1; returns (c0, c1)."""
    c0: dict = {}
    c1: dict = {}
    for m, c in p.items():
        e = P.mono_exp(m, v)
        if e == 0:
            c0[m] = c
        elif e == 1:
            c1[tuple((vv, ee) for vv, ee in m if vv != v)] = c
        else:
            raise AssertionError("radical degree > 1 after reduction")
    return c0, c1


def _exp_denominator_lcm(polys):
    l = 1
    for p in polys:
        for m in p:
            for _, e in m:
                if isinstance(e, Fraction):
                    l = math.lcm(l, e.denominator)
    return l


def _scale_exponents(p: dict, l: int) -> dict:
    if l == 1:
        return p
    return {tuple((v, int(e * l)) for v, e in m): c for m, c in p.items()}


def _unscale_exponents(p: dict, l: int) -> dict:
    if l == 1:
        return p
    out = {}
    for m, c in p.items():
        nm = []
        for v, e in m:
            q = Fraction(e, l)
            nm.append((v, int(q) if q.denominator == 1 else q))
        out[tuple(nm)] = c
    return out


def _cancel(num: dict, den: dict):
    l = _exp_denominator_lcm((num, den))
    n, d = _scale_exponents(num, l), _scale_exponents(den, l)
    g = P.pgcd(n, d)
    if not (P.is_const(g) and P.const_value(g) == 1):
        n = P.pdiv_exact(n, g)
        d = P.pdiv_exact(d, g)
    return _unscale_exponents(n, l), _unscale_exponents(d, l)


def _re_radicalize(num: dict, den: dict):
    """If num carries a lone radical factor and den its square, divide through.

    Turns W/(W-squared-as-polynomial) into 1/W, matching hand-worked forms.
    """
    for a in _radical_atoms_in(num):
        if any(P.mono_exp(m, a) != 1 for m in num):
            continue
        square: RatFunc = V.info(a).data
        q = P.pdiv_exact(pmul(den, square.den), square.num)
        if q is None:
            continue
        num = P.strip_mono(num, ((a, 1),))
        den = pmul_mono(q, ((a, 1),), Fraction(1))
        num, den = _cancel(num, den)
    return num, den


def make(num: dict, den: dict) -> RatFunc:
    """Build the canonical RatFunc for num/den."""
    if not den:
        raise DivisionByZeroError("division by identically zero expression")
    if not num:
        return _raw({}, dict(P.ONE))
    _check_budget(num, den)
    num, den = _clear_units(num, den)

    nr = _reduce_radical_squares(num)
    dr = _reduce_radical_squares(den)
    num = pmul(nr.num, dr.den)
    den = pmul(dr.num, nr.den)
    if not den:
        raise DivisionByZeroError("division by identically zero expression")
    if not num:
        return _raw({}, dict(P.ONE))
    num, den = _clear_units(num, den)

    # rationalize: clear radical atoms out of the denominator by conjugation
    rads = _radical_atoms_in(den)
    while rads:
        a = rads[0]
        c0, c1 = _split_by_var(den, a)
        if not c1:
            rads = rads[1:]
            continue
        square: RatFunc = V.info(a).data
        conj = psub(c0, pmul_mono(c1, ((a, 1),), Fraction(1)))
        den = psub(
            pmul(pmul(c0, c0), square.den),
            pmul(pmul(c1, c1), square.num),
        )
        if not den:
            raise DivisionByZeroError("denominator vanishes identically")
        numr = _reduce_radical_squares(pmul(num, conj))
        num = pmul(numr.num, square.den)
        den = pmul(den, numr.den)
        _check_budget(num, den)
        num, den = _clear_units(num, den)
        rads = _radical_atoms_in(den)

    num, den = _cancel(num, den)
    num, den = _re_radicalize(num, den)

    lc = P.leading_coeff(den)
    if lc != 1:
        num = pscale(num, 1 / lc)
        den = pscale(den, 1 / lc)
    return _raw(num, den)


# -- atoms ------------------------------------------------------------------------

def _square_free_rational(c: Fraction):
    """c = s^2 * r with r square-free; returns (s, r), s > 0."""
    def split(n: int):
        s, r, d = 1, 1, 2
        while d * d <= n:
            while n % (d * d) == 0:
                s *= d
                n //= d * d
            if n % d == 0:
                r *= d
                n //= d
            d += 1
        return s, r * n
    sn, rn = split(c.numerator)
    sd, rd = split(c.denominator)
    return Fraction(sn, sd), Fraction(rn, rd)


def _center_value(p: dict):
    """Exact value of a polynomial at the domain center, or None.

    Center: plain symbols -> 0, exponential atoms -> 1 (their rays vanish),
    ln atoms -> 0 when their argument centers to 1, radical atoms -> the
    rational square root of their centered argument when it is a square.
    """
    total = Fraction(0)
    for m, c in p.items():
        term = c
        for v, e in m:
            kind = V.kind_of(v)
            if kind == V.BASE:
                term = Fraction(0)
                break
            if kind == V.EXP:
                continue
            if kind == V.LN:
                arg = _ratfunc_center(V.info(v).data)
                if arg != 1:
                    return None
                term = Fraction(0)
                break
            if kind == V.RADICAL:
                arg = _ratfunc_center(V.info(v).data)
                if arg is None:
                    return None
                s, r = _square_free_rational(arg)
                if r != 1:
                    return None
                term = term * s ** (e if isinstance(e, int) else 0)
                continue
            return None
        total += term
    return total


def _ratfunc_center(rf: RatFunc):
    n = _center_value(rf.num)
    d = _center_value(rf.den)
    if n is None or d is None or d == 0:
        return None
    return n / d


def sqrt_of(u: RatFunc, name_hint=None) -> RatFunc:
    """Square root: collapses perfect squares, otherwise interns a radical atom.

    Perfect-square roots take the branch that is positive at the domain
    center (falling back to a positive leading coefficient); the sampling
    domain keeps every radical argument positive, so this is the real branch.
    """
    if u.is_zero():
        return ZERO
    prod = pmul(u.num, u.den)
    l = _exp_denominator_lcm((prod,))
    root = P.psqrt(_scale_exponents(prod, 2 * l))
    if root is not None:
        root = _unscale_exponents(root, 2 * l)
        # fractional exponents are the exclusive right of unit (exp) atoms
        ok = all(
            isinstance(e, int) or V.kind_of(v) == V.EXP
            for m in root for v, e in m
        )
        if ok:
            center = _center_value(root)
            if center is not None and center < 0:
                root = pneg(root)
            return make(root, u.den)
    if u.is_rational():
        s, r = _square_free_rational(u.rational_value())
        core = const(r)
        atom = _intern_atom(V.RADICAL, core.key(), core, name_hint)
        return sym(atom) * s
    cn = P.rat_content(u.num)
    cd = P.rat_content(u.den)
    sn, _ = _square_free_rational(cn)
    sd, _ = _square_free_rational(cd)
    scale = Fraction(sn, sd)
    core = u / (scale * scale)
    atom = _intern_atom(V.RADICAL, core.key(), core, name_hint)
    return sym(atom) * scale


def exp_of(w: RatFunc, name_hint=None) -> RatFunc:
    """Exponential: peels ln atoms (exp(k*ln u) = u^k), then interns a ray atom.

    Atoms are keyed by their ray (the exponent scaled to leading coefficient 1),
    so exp(-2*P0/kappa) is the -2 power of the exp(P0/kappa) atom.
    """
    if w.is_zero():
        return ONE
    if any(V.kind_of(v) == V.LN for v in P.pvars(w.den)):
        raise UnsupportedTranscendentalError("ln atom in exponent denominator")
    result = ONE
    rest = w
    for lv in sorted(v for v in P.pvars(w.num) if V.kind_of(v) == V.LN):
        if P.pdegree(rest.num, lv) > 1:
            raise UnsupportedTranscendentalError("nonlinear ln atom in exponent")
        c0, c1 = _split_by_var(rest.num, lv)
        if not c1:
            continue
        coeff = make(c1, rest.den)
        if not coeff.is_rational():
            raise UnsupportedTranscendentalError("non-constant coefficient on ln in exponent")
        k = coeff.rational_value()
        if k.denominator != 1:
            raise UnsupportedTranscendentalError("fractional power of a ln argument")
        arg: RatFunc = V.info(lv).data
        result = result * arg ** int(k)
        rest = make(c0, rest.den)
    if rest.is_zero():
        return result
    lead = rest.num[P.leading_mono(rest.num)]
    ray = rest / lead
    atom = _intern_atom(V.EXP, ray.key(), ray, name_hint)
    q = int(lead) if lead.denominator == 1 else lead
    return result * make({((atom, q),): Fraction(1)}, dict(P.ONE))


def ln_of(u: RatFunc, name_hint=None) -> RatFunc:
    """Logarithm: ln(1) = 0; ln of a pure exp-atom monomial unwinds to its ray."""
    if u.is_zero():
        raise DivisionByZeroError("ln of identically zero expression")
    if u.is_one():
        return ZERO
    if len(u.num) == 1 and len(u.den) == 1:
        (mn, cn), = u.num.items()
        (md, cd), = u.den.items()
        pairs = list(mn) + [(v, -e) for v, e in md]
        if pairs and cn == cd and all(V.kind_of(v) == V.EXP for v, _ in pairs):
            total = ZERO
            for v, e in pairs:
                total = total + V.info(v).data * Fraction(e)
            return total
    atom = _intern_atom(V.LN, u.key(), u, name_hint)
    return sym(atom)


def func_of(name: str, args, orders=None) -> RatFunc:
    """Opaque application of an abstract function, with derivative orders."""
    args = tuple(as_ratfunc(a) for a in args)
    if orders is None:
        orders = (0,) * len(args)
    orders = tuple(orders)
    key = (name, orders, tuple(a.key() for a in args))
    suffix = "".join(f"_d{i + 1}" * n for i, n in enumerate(orders))
    atom = V.intern_atom(V.FUNC, key, (name, args, orders), name_hint=f"{name}{suffix}")
    return sym(atom)


def sinh_of(w: RatFunc) -> RatFunc:
    e = exp_of(w)
    return (e - ONE / e) / 2


def cosh_of(w: RatFunc) -> RatFunc:
    e = exp_of(w)
    return (e + ONE / e) / 2


# -- calculus ------------------------------------------------------------------------

def _closure(vid: int) -> frozenset:
    with _CACHE_LOCK:
        got = _CLOSURE_CACHE.get(vid)
    if got is not None:
        return got
    info = V.info(vid)
    if info.kind == V.BASE:
        out = frozenset((vid,))
    elif info.kind == V.FUNC:
        out = frozenset((vid,))
        for a in info.data[1]:
            out |= a.free_vars()
    else:
        out = frozenset((vid,)) | info.data.free_vars()
    with _CACHE_LOCK:
        _CLOSURE_CACHE[vid] = out
    return out


def _atom_derivative(vid: int, wrt: int) -> RatFunc:
    with _CACHE_LOCK:
        got = _DERIV_CACHE.get((vid, wrt))
    if got is not None:
        return got
    info = V.info(vid)
    if info.kind == V.BASE:
        out = ONE if vid == wrt else ZERO
    elif info.kind == V.RADICAL:
        du = diff(info.data, wrt)
        out = ZERO if du.is_zero() else du * sym(vid) / (info.data * 2)
    elif info.kind == V.EXP:
        out = diff(info.data, wrt)  # ray'; the caller folds in q * E^q
    elif info.kind == V.LN:
        du = diff(info.data, wrt)
        out = ZERO if du.is_zero() else du / info.data
    elif info.kind == V.FUNC:
        name, args, orders = info.data
        out = ZERO
        for i, a in enumerate(args):
            da = diff(a, wrt)
            if da.is_zero():
                continue
            bumped = tuple(n + (1 if j == i else 0) for j, n in enumerate(orders))
            out = out + da * func_of(name, args, bumped)
    else:
        raise AssertionError(info.kind)
    with _CACHE_LOCK:
        _DERIV_CACHE[(vid, wrt)] = out
    return out


def _poly_diff(p: dict, wrt: int) -> RatFunc:
    out = ZERO
    plain = P.pdiff(p, wrt)
    if plain:
        out = _raw(plain, dict(P.ONE))
    for v in sorted(P.pvars(p)):
        if v == wrt:
            continue
        kind = V.kind_of(v)
        if kind == V.BASE or wrt not in _closure(v):
            continue
        dv = _atom_derivative(v, wrt)
        if dv.is_zero():
            continue
        if kind == V.EXP:
            acc: dict = {}
            for m, c in p.items():
                e = P.mono_exp(m, v)
                if e:
                    acc = padd(acc, {m: c * Fraction(e)})
            if acc:
                out = out + dv * make(acc, dict(P.ONE))
        else:
            dpa = P.pdiff(p, v)
            if dpa:
                out = out + dv * make(dpa, dict(P.ONE))
    return out


def diff(rf: RatFunc, wrt) -> RatFunc:
    """Exact partial derivative with chain rule through all atoms."""
    wrt = wrt if isinstance(wrt, int) else V.lookup(wrt)
    dn = _poly_diff(rf.num, wrt)
    if rf.den == P.ONE:
        return dn
    dd = _poly_diff(rf.den, wrt)
    den_rf = _raw(dict(rf.den), dict(P.ONE))
    num_rf = _raw(dict(rf.num), dict(P.ONE))
    return (dn * den_rf - num_rf * dd) / (den_rf * den_rf)


def check_acyclic(mapping: dict):
    """Reject binding sets whose key symbols mention each other transitively."""
    keys = set(mapping)
    graph = {k: (rf.free_vars() & keys) for k, rf in mapping.items()}
    done: set = set()

    def visit(k, stack):
        if k in done:
            return
        if k in stack:
            names = " -> ".join(V.name_of(v) for v in (*stack, k))
            raise CyclicBindingError(f"cyclic bindings: {names}")
        for n in graph[k]:
            visit(n, stack + (k,))
        done.add(k)

    for k in keys:
        visit(k, ())


def subst(rf: RatFunc, mapping: dict) -> RatFunc:
    """Simultaneous substitution vid -> RatFunc, descending into atom definitions."""
    if not mapping:
        return rf
    touched = set(mapping)

    def var_value(v: int) -> RatFunc:
        if v in mapping:
            return mapping[v]
        info = V.info(v)
        if info.kind == V.BASE or not (_closure(v) & touched):
            return sym(v)
        if info.kind == V.RADICAL:
            return sqrt_of(subst(info.data, mapping))
        if info.kind == V.LN:
            return ln_of(subst(info.data, mapping))
        if info.kind == V.FUNC:
            name, args, orders = info.data
            return func_of(name, tuple(subst(a, mapping) for a in args), orders)
        raise AssertionError(info.kind)

    def poly_value(p: dict) -> RatFunc:
        total = ZERO
        for m, c in p.items():
            term = const(c)
            for v, e in m:
                if V.kind_of(v) == V.EXP and v not in mapping:
                    if _closure(v) & touched:
                        ray = V.info(v).data
                        term = term * exp_of(subst(ray, mapping) * Fraction(e))
                    else:
                        term = term * make({((v, e),): Fraction(1)}, dict(P.ONE))
                else:
                    if isinstance(e, Fraction):
                        raise NonIntegerExponentError("fractional power of a substituted variable")
                    term = term * var_value(v) ** e
            total = total + term
        return total

    num = poly_value(rf.num)
    den = poly_value(rf.den)
    return num / den


def subst_names(rf: RatFunc, mapping: dict) -> RatFunc:
    return subst(rf, {(V.lookup(k) if isinstance(k, str) else k): as_ratfunc(v)
                      for k, v in mapping.items()})


def eliminate_square(rf: RatFunc, v, rhs: RatFunc) -> RatFunc:
    """Rewrite v**2 -> rhs everywhere (used for mass-shell reduction)."""
    v = v if isinstance(v, int) else V.lookup(v)
    if rhs.den != P.ONE:
        raise ValueError("shell replacement must be polynomial")
    num = P.reduce_var_square(rf.num, v, rhs.num)
    den = P.reduce_var_square(rf.den, v, rhs.num)
    if not den:
        raise DivisionByZeroError("denominator vanishes under shell reduction")
    return make(num, den)

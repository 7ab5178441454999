"""Polynomial algorithms above the arithmetic kernel.

Everything here works on the kernel's plain-dict polynomials.  These routines
(exact division, primitive-PRS gcd, perfect-square root, single-variable
rewrites) run far less often than the kernel ops, so they stay in Python in
both kernel lanes.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import cmp_to_key

from .kernel import mono_mul, mono_pow, padd, psub, pneg, pscale, pmul, pmul_mono, ppow

ONE = {(): Fraction(1)}


def pconst(c) -> dict:
    c = Fraction(c)
    return {(): c} if c else {}


def pvar(vid: int) -> dict:
    return {((vid, 1),): Fraction(1)}


def is_zero(p: dict) -> bool:
    return not p


def is_const(p: dict) -> bool:
    return not p or (len(p) == 1 and () in p)


def const_value(p: dict) -> Fraction:
    if not p:
        return Fraction(0)
    return p[()]


def pvars(p: dict) -> set:
    out = set()
    for m in p:
        for v, _ in m:
            out.add(v)
    return out


def mono_exp(m: tuple, v: int):
    for vid, e in m:
        if vid == v:
            return e
    return 0


def pdegree(p: dict, v: int):
    return max((mono_exp(m, v) for m in p), default=0)


def _mono_cmp(m1: tuple, m2: tuple) -> int:
    """Lex order, lower var ids most significant.  Multiplication-stable."""
    i = j = 0
    while i < len(m1) or j < len(m2):
        v1 = m1[i][0] if i < len(m1) else None
        v2 = m2[j][0] if j < len(m2) else None
        if v1 is not None and (v2 is None or v1 < v2):
            e1, e2 = m1[i][1], 0
            v = v1
        elif v2 is not None and (v1 is None or v2 < v1):
            e1, e2 = 0, m2[j][1]
            v = v2
        else:
            e1, e2 = m1[i][1], m2[j][1]
            v = v1
        if e1 != e2:
            return 1 if e1 > e2 else -1
        if i < len(m1) and m1[i][0] == v:
            i += 1
        if j < len(m2) and m2[j][0] == v:
            j += 1
    return 0


MONO_KEY = cmp_to_key(_mono_cmp)


def leading_mono(p: dict) -> tuple:
    return max(p, key=MONO_KEY)


def leading_coeff(p: dict) -> Fraction:
    return p[leading_mono(p)]


def mono_content(p: dict) -> tuple:
    """Componentwise minimum exponent over all monomials (the monomial gcd)."""
    it = iter(p)
    first = next(it)
    mins = dict(first)
    for m in it:
        seen = dict(m)
        for v in list(mins):
            e = seen.get(v, 0)
            if e < mins[v]:
                if e == 0:
                    del mins[v]
                else:
                    mins[v] = e
        if not mins:
            return ()
    return tuple(sorted(mins.items()))


def strip_mono(p: dict, m: tuple) -> dict:
    if not m:
        return p
    inv = mono_pow(m, -1)
    return {mono_mul(mo, inv): c for mo, c in p.items()}


def frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(math.gcd(a.numerator, b.numerator),
                    math.lcm(a.denominator, b.denominator))


def rat_content(p: dict) -> Fraction:
    """Positive rational content; dividing by it gives primitive integer coeffs."""
    g = Fraction(0)
    for c in p.values():
        g = frac_gcd(g, abs(c))
        if g == 1:
            break
    return g if g else Fraction(1)


def pdiv_exact(f: dict, g: dict):
    """Return q with f == q*g, or None if g does not divide f exactly."""
    if not f:
        return {}
    if not g:
        return None
    if is_const(g):
        return pscale(f, 1 / const_value(g))
    lg = leading_mono(g)
    cg = g[lg]
    rem = dict(f)
    q = {}
    while rem:
        lf = leading_mono(rem)
        qm = mono_div(lf, lg)
        if any(e < 0 for _, e in qm):
            return None
        qc = rem[lf] / cg
        q[qm] = qc
        rem = psub(rem, pmul_mono(g, qm, qc))
        if rem and _mono_cmp(leading_mono(rem), lf) >= 0:
            return None
    return q


def mono_div(m1: tuple, m2: tuple) -> tuple:
    return mono_mul(m1, mono_pow(m2, -1))


def coeffs_in_var(p: dict, v: int) -> dict:
    """View p as a polynomial in v: {degree: coefficient-poly without v}."""
    out: dict = {}
    for m, c in p.items():
        e = 0
        rest = []
        for vid, ee in m:
            if vid == v:
                e = ee
            else:
                rest.append((vid, ee))
        d = out.setdefault(e, {})
        rest = tuple(rest)
        acc = d.get(rest)
        if acc is None:
            d[rest] = c
        else:
            acc = acc + c
            if acc:
                d[rest] = acc
            else:
                del d[rest]
    return {e: d for e, d in out.items() if d}


def from_coeffs(coeffs: dict, v: int) -> dict:
    out: dict = {}
    for e, cp in coeffs.items():
        vm = ((v, e),) if e else ()
        out = padd(out, pmul_mono(cp, vm, Fraction(1)))
    return out


def _prem(f: dict, g: dict, v: int) -> dict:
    """Pseudo-remainder of f by g with respect to v."""
    df = pdegree(f, v)
    dg = pdegree(g, v)
    if df < dg:
        return f
    lc_g = coeffs_in_var(g, v).get(dg, {})
    r = f
    while r and pdegree(r, v) >= dg:
        dr = pdegree(r, v)
        lc_r = coeffs_in_var(r, v).get(dr, {})
        shift = ((v, dr - dg),) if dr > dg else ()
        r = psub(pmul(r, lc_g), pmul(pmul_mono(g, shift, Fraction(1)), lc_r))
    return r


def _content_in_var(p: dict, v: int) -> dict:
    cs = list(coeffs_in_var(p, v).values())
    g = cs[0]
    for c in cs[1:]:
        g = pgcd(g, c)
        if is_const(g):
            return ONE
    return g


def pgcd(f: dict, g: dict) -> dict:
    """Multivariate gcd over Q via monomial/rational content + primitive PRS.

    Exponents must be nonnegative integers (callers rescale fractional unit
    exponents first).  The result has positive leading coefficient.
    """
    if not f and not g:
        return {}
    if not f:
        return _sign_normalized(g)
    if not g:
        return _sign_normalized(f)
    mf, mg = mono_content(f), mono_content(g)
    common = tuple(sorted((v, min(dict(mf).get(v, 0), e)) for v, e in mg if dict(mf).get(v, 0)))
    common = tuple((v, e) for v, e in common if e)
    f = strip_mono(f, mf)
    g = strip_mono(g, mg)
    cf, cg = rat_content(f), rat_content(g)
    rc = frac_gcd(cf, cg)
    f = pscale(f, 1 / cf)
    g = pscale(g, 1 / cg)
    if is_const(f) or is_const(g):
        return {common: rc}
    shared = sorted(pvars(f) & pvars(g))
    if not shared:
        return {common: rc}
    v = shared[0]
    cont_f = _content_in_var(f, v)
    cont_g = _content_in_var(g, v)
    fp = pdiv_exact(f, cont_f)
    gp = pdiv_exact(g, cont_g)
    if pdegree(fp, v) < pdegree(gp, v):
        fp, gp = gp, fp
    while gp:
        r = _prem(fp, gp, v)
        if r:
            r = pdiv_exact(r, _content_in_var(r, v))
            r = pscale(r, 1 / rat_content(r))
        fp, gp = gp, r
    head = pdiv_exact(fp, _content_in_var(fp, v))
    head = pscale(head, 1 / rat_content(head))
    out = pmul(pgcd(cont_f, cont_g), head)
    out = _sign_normalized(out)
    if rc != 1 or common:
        out = pmul_mono(out, common, rc)
    return out


def _sign_normalized(p: dict) -> dict:
    if p and leading_coeff(p) < 0:
        return pneg(p)
    return p


def _frac_sqrt(c: Fraction):
    if c < 0:
        return None
    rn = math.isqrt(c.numerator)
    rd = math.isqrt(c.denominator)
    if rn * rn != c.numerator or rd * rd != c.denominator:
        return None
    return Fraction(rn, rd)


def psqrt(p: dict):
    """Exact square root of a polynomial, or None if p is not a square.

    Sign convention: the leading coefficient of the result is positive.
    """
    if not p:
        return {}
    if is_const(p):
        r = _frac_sqrt(const_value(p))
        return None if r is None else {(): r}
    mc = mono_content(p)
    if any(e % 2 for _, e in mc if isinstance(e, int)):
        # odd monomial content can still sit inside a square like x*(x+2+1/x);
        # such inputs never reach here because fractions are cleared first
        return None
    if any(not isinstance(e, int) for _, e in mc):
        return None
    half_mc = tuple((v, e // 2) for v, e in mc)
    body = strip_mono(p, mc)
    v = min(pvars(body), default=None)
    if v is None:
        r = _frac_sqrt(const_value(body))
        return None if r is None else {half_mc: r}
    cs = coeffs_in_var(body, v)
    d = max(cs)
    if d % 2:
        return None
    t = d // 2
    qt = psqrt(cs[d])
    if qt is None:
        return None
    q: dict = {t: qt}
    two_qt = pscale(qt, Fraction(2))
    for k in range(t - 1, -1, -1):
        acc = cs.get(t + k, {})
        for a in range(k + 1, t):
            b = t + k - a
            if b <= a:
                continue
            pa, pb = q.get(a), q.get(b)
            if pa and pb:
                acc = psub(acc, pscale(pmul(pa, pb), Fraction(2)))
        qk = pdiv_exact(acc, two_qt)
        if qk is None:
            return None
        if qk:
            q[k] = qk
    cand = from_coeffs(q, v)
    if psub(pmul(cand, cand), body):
        return None
    if leading_coeff(cand) < 0:
        cand = pneg(cand)
    return pmul_mono(cand, half_mc, Fraction(1))


def reduce_var_square(p: dict, v: int, rhs: dict) -> dict:
    """Rewrite v**(2k+r) -> rhs**k * v**r throughout p (exponents must be ints)."""
    out: dict = {}
    plain: dict = {}
    for m, c in p.items():
        e = mono_exp(m, v)
        if isinstance(e, int) and e >= 2:
            k, r = divmod(e, 2)
            rest = tuple((vid, ee) for vid, ee in m if vid != v)
            if r:
                rest = mono_mul(rest, ((v, 1),))
            out = padd(out, pmul_mono(ppow(rhs, k), rest, c))
        else:
            plain[m] = c
    return padd(out, plain) if out else p


def pdiff(p: dict, v: int) -> dict:
    """Partial derivative treating every variable as independent."""
    out: dict = {}
    for m, c in p.items():
        e = mono_exp(m, v)
        if not e:
            continue
        nm = mono_mul(m, ((v, -1),))
        acc = out.get(nm)
        ce = c * e
        if acc is None:
            out[nm] = ce
        else:
            acc = acc + ce
            if acc:
                out[nm] = acc
            else:
                del out[nm]
    return out


def subs_var_poly(p: dict, v: int, repl: dict) -> dict:
    """Substitute an ordinary variable by a polynomial (integer exponents >= 0)."""
    out: dict = {}
    for m, c in p.items():
        e = mono_exp(m, v)
        rest = tuple((vid, ee) for vid, ee in m if vid != v)
        if not e:
            out = padd(out, {rest: c})
        else:
            out = padd(out, pmul_mono(ppow(repl, e), rest, c))
    return out

"""Pure-Python kernel for sparse multivariate polynomial arithmetic.

A monomial is a tuple of (var_id, exponent) pairs sorted by var_id with no
zero exponents; the empty tuple is 1.  Exponents are ints (or Fractions for
unit variables, which may also be negative).  A polynomial is a dict mapping
monomials to nonzero Fraction coefficients; the empty dict is 0.

This module is the hot inner loop of expression normalization.  A compiled
twin (_poly_cy) implements the same functions; kernel.py picks one at import.
"""

from fractions import Fraction

IMPL = "python"

_ZERO = Fraction(0)


def mono_mul(m1, m2):
    """Product of two monomials (exponents add, zeros dropped)."""
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1 = len(m1)
    n2 = len(m2)
    while i < n1 and j < n2:
        v1, e1 = m1[i]
        v2, e2 = m2[j]
        if v1 == v2:
            e = e1 + e2
            if e:
                out.append((v1, e))
            i += 1
            j += 1
        elif v1 < v2:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def mono_pow(m, k):
    """k-th power of a monomial; k may be negative or zero."""
    if k == 0 or not m:
        return ()
    if k == 1:
        return m
    return tuple((v, e * k) for v, e in m)


def mono_div(m1, m2):
    """m1 / m2 as a monomial (exponents subtract; may go negative)."""
    return mono_mul(m1, mono_pow(m2, -1))


def padd(a, b):
    """Sum of two polynomials."""
    if not a:
        return dict(b)
    if not b:
        return dict(a)
    out = dict(a)
    for m, c in b.items():
        acc = out.get(m)
        if acc is None:
            out[m] = c
        else:
            acc = acc + c
            if acc:
                out[m] = acc
            else:
                del out[m]
    return out


def psub(a, b):
    """Difference of two polynomials."""
    if not b:
        return dict(a)
    out = dict(a)
    for m, c in b.items():
        acc = out.get(m)
        if acc is None:
            out[m] = -c
        else:
            acc = acc - c
            if acc:
                out[m] = acc
            else:
                del out[m]
    return out


def pneg(a):
    """Negation of a polynomial."""
    return {m: -c for m, c in a.items()}


def pscale(a, c):
    """Polynomial times a scalar Fraction."""
    if not c:
        return {}
    if c == 1:
        return dict(a)
    return {m: k * c for m, k in a.items()}


def pmul_mono(a, mono, coeff):
    """Polynomial times coeff*mono."""
    if not coeff:
        return {}
    if not mono:
        return pscale(a, coeff)
    out = {}
    for m, c in a.items():
        out[mono_mul(m, mono)] = c * coeff
    return out


def pmul(a, b):
    """Product of two polynomials."""
    if not a or not b:
        return {}
    if len(b) > len(a):
        a, b = b, a
    if len(b) == 1:
        ((m, c),) = b.items()
        return pmul_mono(a, m, c)
    out = {}
    for m2, c2 in b.items():
        for m1, c1 in a.items():
            m = mono_mul(m1, m2)
            c = c1 * c2
            acc = out.get(m)
            if acc is None:
                out[m] = c
            else:
                acc = acc + c
                if acc:
                    out[m] = acc
                else:
                    del out[m]
    return out


def ppow(a, k):
    """k-th power of a polynomial, k >= 0, by binary exponentiation."""
    if k < 0:
        raise ValueError("negative polynomial power")
    result = {(): Fraction(1)}
    if k == 0:
        return result
    base = dict(a)
    while True:
        if k & 1:
            result = pmul(result, base)
        k >>= 1
        if not k:
            return result
        base = pmul(base, base)

"""Truncated power series of canonical forms in one parameter.

Coefficients are exact canonical forms in the remaining symbols.  Series of a
fraction are computed from numerator and denominator Taylor data, so simple
poles that cancel (like the 1/kappa factors in deformation coefficients) are
handled exactly; a genuine pole at the center raises PoleAtCenterError.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import vars as V
from . import ratfunc as R
from .ratfunc import RatFunc, KpalgError

_EXTRA_SHIFT = 8  # how far past `order` to search for a leading coefficient


class PoleAtCenterError(KpalgError):
    pass


@dataclass(frozen=True)
class SeriesPoly:
    """Truncated expansion sum(coeffs[k] * (var - center)**k, k <= order)."""

    var: str
    center: Fraction
    order: int
    coeffs: tuple

    def coeff(self, k: int) -> RatFunc:
        if k > self.order:
            raise IndexError(f"coefficient {k} beyond truncation order {self.order}")
        return self.coeffs[k] if k < len(self.coeffs) else R.ZERO

    def _binop(self, other: "SeriesPoly", op):
        if self.var != other.var or self.center != other.center:
            raise ValueError("series mismatch: different variable or center")
        order = min(self.order, other.order)
        return SeriesPoly(self.var, self.center, order,
                          tuple(op(self.coeff(k), other.coeff(k)) for k in range(order + 1)))

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, RatFunc)):
            return SeriesPoly(self.var, self.center, self.order,
                              tuple(c * other for c in self.coeffs))
        if self.var != other.var or self.center != other.center:
            raise ValueError("series mismatch: different variable or center")
        order = min(self.order, other.order)
        coeffs = []
        for k in range(order + 1):
            acc = R.ZERO
            for i in range(k + 1):
                acc = acc + self.coeff(i) * other.coeff(k - i)
            coeffs.append(acc)
        return SeriesPoly(self.var, self.center, order, tuple(coeffs))

    __rmul__ = __mul__

    def eval_at(self, env: dict, eps: float, funcs=None) -> float:
        from .numeric import eval_ratfunc
        total = 0.0
        for k, c in enumerate(self.coeffs):
            total += eval_ratfunc(c, env, funcs) * eps ** k
        return total


def taylor_coeffs(rf: RatFunc, var: int, center: Fraction, upto: int) -> list:
    """Exact Taylor coefficients of rf around var=center, orders 0..upto."""
    out = []
    current = rf
    fact = Fraction(1)
    centre = {var: R.const(center)}
    for k in range(upto + 1):
        out.append(R.subst(current, centre) / fact)
        if k < upto:
            current = R.diff(current, var)
            fact *= k + 1
    return out


def series(e, var, center=0, order: int = 2, env=None) -> SeriesPoly:
    """Truncated series of e in `var` around `center`."""
    from . import expr as E
    rf = E._coerce(e, env)
    vid = V.lookup(var) if isinstance(var, str) else var
    center = Fraction(center)
    num = R.make(dict(rf.num), dict(R.P.ONE))
    den = R.make(dict(rf.den), dict(R.P.ONE))
    reach = order + _EXTRA_SHIFT
    ncoeffs = taylor_coeffs(num, vid, center, reach)
    dcoeffs = taylor_coeffs(den, vid, center, reach)
    a = next((i for i, c in enumerate(ncoeffs) if not c.is_zero()), None)
    b = next((i for i, c in enumerate(dcoeffs) if not c.is_zero()), None)
    if b is None:
        raise PoleAtCenterError("denominator vanishes to high order at the center")
    if a is None:
        return SeriesPoly(V.name_of(vid), center, order, tuple([R.ZERO] * (order + 1)))
    shift = a - b
    if shift < 0:
        raise PoleAtCenterError(
            f"pole of order {-shift} at {V.name_of(vid)} = {center}")
    # divide the shifted series: q_k = (n_k - sum q_i d_(k-i)) / d_0
    n = ncoeffs[a:]
    d = dcoeffs[b:]
    inner_order = order - shift
    q = []
    for k in range(inner_order + 1):
        acc = n[k] if k < len(n) else R.ZERO
        for i in range(k):
            acc = acc - q[i] * (d[k - i] if k - i < len(d) else R.ZERO)
        q.append(acc / d[0])
    coeffs = [R.ZERO] * shift + q
    return SeriesPoly(V.name_of(vid), center, order, tuple(coeffs[: order + 1]))


def limit_at(e, var, center=0, env=None) -> RatFunc:
    """Order-0 series coefficient (the finite limit value)."""
    return series(e, var, center, 0, env).coeff(0)

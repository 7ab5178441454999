"""Equality verdicts: exact, modulo the mass shell, and numeric.

The exact and shell modes decide by canonical normalization; the numeric mode
samples seeded domain-valid points.  A blown normalization budget downgrades
to numeric with an explicit numeric-only flag rather than failing silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Optional

from . import vars as V
from . import ratfunc as R
from . import expr as E
from .ratfunc import RatFunc, BudgetExceededError
from .numeric import DomainError, eval_ratfunc, sample_point_for

EXACT = "exact"
SHELL = "shell"
NUMERIC = "numeric"

REL_TOL = 1e-9
ABS_FLOOR = 1e-12


@dataclass(frozen=True)
class ShellRule:
    """Constraint surface rewrite: eliminate one squared symbol."""

    var: int
    replacement: RatFunc

    @classmethod
    def momentum(cls) -> "ShellRule":
        # p.p -> p0^2 - m^2 realized as p3^2 -> p0^2 - m^2 - p1^2 - p2^2
        p0, p1, p2 = R.sym(V.P[0]), R.sym(V.P[1]), R.sym(V.P[2])
        m = R.sym(V.MASS)
        return cls(V.P[3], p0 * p0 - m * m - p1 * p1 - p2 * p2)

    def reduce(self, rf: RatFunc) -> RatFunc:
        return R.eliminate_square(rf, self.var, self.replacement)


@dataclass
class Verdict:
    ok: bool
    mode: str
    residual: Optional[RatFunc] = None
    evidence: dict = field(default_factory=dict)
    numeric_only: bool = False
    note: str = ""

    def residual_text(self) -> str:
        if self.residual is None:
            return ""
        return E.format_ratfunc(self.residual)

    def __bool__(self):
        return self.ok


def _numeric_verdict(delta: RatFunc, seed: int, samples: int, tol: float,
                     shell: bool, funcs, numeric_only: bool, note: str = "") -> Verdict:
    rng = Random(seed)
    names = sorted(V.name_of(v) for v in delta.free_vars()
                   if V.kind_of(v) == V.BASE)
    worst = 0.0
    worst_pt = None
    checked = 0
    attempts = 0
    while checked < samples and attempts < samples * 20:
        attempts += 1
        pt = sample_point_for(rng, names, shell=shell)
        env = pt.env()
        for name in names:
            vid = V.lookup(name)
            if vid not in env:
                env[vid] = pt.values[name]
        try:
            dev = abs(eval_ratfunc(delta, env, funcs))
        except DomainError:
            continue
        checked += 1
        if dev > worst:
            worst = dev
            worst_pt = {n: pt.values[n] for n in names}
    if checked == 0:
        return Verdict(False, NUMERIC, delta, {"error": "no domain-valid points"},
                       numeric_only, note or "sampling failed")
    ok = worst <= max(tol, ABS_FLOOR)
    return Verdict(ok, NUMERIC, delta,
                   {"samples": checked, "max_deviation": worst, "worst_point": worst_pt},
                   numeric_only, note)


def equal(a, b, mode: str = EXACT, env=None, shell_rule: Optional[ShellRule] = None,
          seed: int = 42, samples: int = 100, tol: float = REL_TOL,
          funcs=None) -> Verdict:
    """Compare two expressions under the requested mode.

    Exact and shell verdicts carry the symbolic residual; numeric verdicts
    carry the worst sampled point and deviation.  The numeric deviation is
    relative to the magnitude of the compared values with an absolute floor.
    """
    ra = E._coerce(a, env)
    rb = E._coerce(b, env)
    shell_rule = shell_rule or ShellRule.momentum()
    try:
        delta = ra - rb
        if mode == EXACT:
            return Verdict(delta.is_zero(), EXACT, delta)
        if mode == SHELL:
            residual = shell_rule.reduce(delta)
            return Verdict(residual.is_zero(), SHELL, residual, note="on-shell")
        if mode == NUMERIC:
            scale = _scale_estimate(ra, rb, seed, funcs)
            return _numeric_verdict(delta, seed, samples, tol * scale,
                                    shell=False, funcs=funcs, numeric_only=False)
    except BudgetExceededError as exc:
        rng = Random(seed)
        delta = None
        try:
            delta = ra - rb  # may still fit once intermediate pressure is gone
        except BudgetExceededError:
            pass
        if delta is None:
            names = sorted(V.name_of(v) for v in (ra.free_vars() | rb.free_vars())
                           if V.kind_of(v) == V.BASE)
            worst = 0.0
            worst_pt = None
            for _ in range(samples):
                pt = sample_point_for(rng, names, shell=(mode == SHELL))
                try:
                    dev = abs(eval_ratfunc(ra, pt.env(), funcs)
                              - eval_ratfunc(rb, pt.env(), funcs))
                except DomainError:
                    continue
                if dev > worst:
                    worst, worst_pt = dev, dict(pt.values)
            return Verdict(worst <= max(tol, ABS_FLOOR), NUMERIC, None,
                           {"max_deviation": worst, "worst_point": worst_pt},
                           numeric_only=True, note=str(exc))
        return _numeric_verdict(delta, seed, samples, tol, shell=(mode == SHELL),
                                funcs=funcs, numeric_only=True, note=str(exc))
    raise ValueError(f"unknown equality mode {mode!r}")


def _scale_estimate(ra: RatFunc, rb: RatFunc, seed: int, funcs) -> float:
    rng = Random(seed)
    names = sorted(V.name_of(v) for v in (ra.free_vars() | rb.free_vars())
                   if V.kind_of(v) == V.BASE)
    best = 1.0
    for _ in range(5):
        pt = sample_point_for(rng, names)
        try:
            va = abs(eval_ratfunc(ra, pt.env(), funcs))
            vb = abs(eval_ratfunc(rb, pt.env(), funcs))
        except DomainError:
            continue
        best = max(best, va, vb)
    return best


def spot_check(delta: RatFunc, seed: int = 42, samples: int = 20,
               tol: float = 1e-7, shell: bool = False, funcs=None) -> Verdict:
    """Quick numeric confirmation used as a tripwire next to symbolic passes."""
    return _numeric_verdict(delta, seed, samples, tol, shell, funcs, False)

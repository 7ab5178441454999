"""Global interning table for symbols and atoms.

Every scalar the system knows — phase-space symbols, deformation parameters,
radical/exponential/logarithm atoms, abstract function applications — is a
variable with a dense integer id.  Polynomials refer to variables by id only;
the metadata needed to differentiate, substitute into, print, or numerically
evaluate an atom lives here.

The table is append-only and guarded by a lock, so expressions are immutable
values that can be shared freely between threads.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Optional

BASE = "base"
RADICAL = "radical"  # atom**2 = arg (a rational function)
EXP = "exp"          # atom = exp(ray); invertible, powers may be fractional
LN = "ln"            # atom = ln(arg)
FUNC = "func"        # opaque application name(args...) with derivative orders


@dataclass(frozen=True)
class VarInfo:
    vid: int
    name: str
    kind: str
    data: Any = None  # kind-specific payload set by the expression layer


_LOCK = threading.RLock()
_VARS: list[VarInfo] = []
_BY_NAME: dict[str, int] = {}
_ATOMS: dict[Any, int] = {}


class UnknownSymbolError(KeyError):
    pass


def register_base(name: str) -> int:
    """Intern a plain symbol, returning its id (idempotent)."""
    with _LOCK:
        vid = _BY_NAME.get(name)
        if vid is not None:
            return vid
        vid = len(_VARS)
        _VARS.append(VarInfo(vid, name, BASE))
        _BY_NAME[name] = vid
        return vid


def intern_atom(kind: str, key: Any, data: Any, name_hint: Optional[str] = None) -> int:
    """Intern an atom keyed by its canonical defining data."""
    with _LOCK:
        vid = _ATOMS.get((kind, key))
        if vid is not None:
            return vid
        vid = len(_VARS)
        name = name_hint or f"_{kind}{vid}"
        _VARS.append(VarInfo(vid, name, kind, data))
        _ATOMS[(kind, key)] = vid
        _BY_NAME.setdefault(name, vid)
        return vid


def lookup(name: str) -> int:
    with _LOCK:
        vid = _BY_NAME.get(name)
        if vid is None:
            raise UnknownSymbolError(name)
        return vid


def maybe_lookup(name: str) -> Optional[int]:
    with _LOCK:
        return _BY_NAME.get(name)


def info(vid: int) -> VarInfo:
    with _LOCK:
        return _VARS[vid]


def name_of(vid: int) -> str:
    return info(vid).name


def kind_of(vid: int) -> str:
    return info(vid).kind


# Reserved phase-space symbols and parameters; ids are stable because this
# module registers them at import, before anything else touches the table.
X = tuple(register_base(f"x{i}") for i in range(4))
P = tuple(register_base(f"p{i}") for i in range(4))
KAPPA = register_base("kappa")
KAPPABAR = register_base("kappabar")
MASS = register_base("m")

RESERVED = {name_of(v) for v in (*X, *P, KAPPA, KAPPABAR, MASS)}

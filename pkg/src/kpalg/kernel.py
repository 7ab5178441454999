"""Kernel selection: compiled polynomial core when available, else pure Python.

Set KPA_PURE=1 to force the pure-Python lane (used by the benchmark and by
tests that exercise both implementations).
"""

import os

if os.environ.get("KPA_PURE") == "1":
    from . import _poly_py as impl
else:
    try:
        from . import _poly_cy as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _poly_py as impl

IMPL = impl.IMPL

mono_mul = impl.mono_mul
mono_pow = impl.mono_pow
mono_div = impl.mono_div
padd = impl.padd
psub = impl.psub
pneg = impl.pneg
pscale = impl.pscale
pmul = impl.pmul
pmul_mono = impl.pmul_mono
ppow = impl.ppow

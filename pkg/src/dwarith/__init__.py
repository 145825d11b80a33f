"""128-bit (double-word) modular arithmetic on 64-bit lanes, with emulated
vector ISAs, NTT/BLAS kernels, a benchmark harness and performance models."""

from .lanes import DWordVec, backend_select
from .modular import Modulus, addmod, modulus_new, mulmod, submod
from .words import DWord

__all__ = ["DWord", "DWordVec", "Modulus", "addmod", "backend_select", "modulus_new", "mulmod", "submod"]
__version__ = "0.1.0"

"""Backend selection for the sampler kernels.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``GLSHRINK_KERNELS=python`` is set) the pure-Python
implementation is used. Both give bitwise-identical output.
"""
from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _pykernels

__all__ = ["BACKEND", "get_backend", "KernelSet"]


def _load_compiled() -> ModuleType | None:
    if os.environ.get("GLSHRINK_KERNELS", "").lower() == "python":
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


class KernelSet:
    """Uniform numpy-array front end over one kernel module."""

    def __init__(self, module: ModuleType, name: str):
        self.module = module
        self.name = name
        self._compiled = name == "compiled"

    def __repr__(self) -> str:
        return f"KernelSet({self.name!r})"

    # scalars --------------------------------------------------------------
    def hsplus_f(self, u: float) -> float:
        return float(self.module.hsplus_f(float(u)))

    def hsplus_finv(self, x: float) -> float:
        return float(self.module.hsplus_finv(float(x)))

    def uniform_stream(self, bitgen, n: int) -> np.ndarray:
        return np.asarray(self.module.uniform_stream(bitgen, int(n)), dtype=float)

    # helpers --------------------------------------------------------------
    @staticmethod
    def _arr(a) -> np.ndarray:
        # memoryviews in the compiled module need writeable buffers
        return np.require(np.asarray(a, dtype=float), requirements=["C", "W"])

    def _vec(self, a):
        a = self._arr(a)
        return a if self._compiled else a.tolist()

    def _inplace(self, fn, arrays, *args):
        """Call a sweep that mutates ``arrays`` (numpy float arrays) in place."""
        if self._compiled:
            fn(*arrays, *args)
            return
        lists = [a.tolist() for a in arrays]
        fn(*lists, *args)
        for a, lst in zip(arrays, lists):
            a[:] = lst

    @staticmethod
    def _out(n_keep: int, p: int):
        return np.zeros((n_keep, p)), np.zeros(n_keep)

    # sweeps ---------------------------------------------------------------
    def hs_sweep(self, y, nu, omega, u, glob, eta2, tau2_fixed, bitgen) -> None:
        self._inplace(
            lambda y_, *rest: self.module.hs_sweep(y_, *rest),
            [self._arr(y), nu, omega, u, glob],
            float(eta2), float(tau2_fixed), bitgen,
        )

    def hsplus_sweep(self, y, lam, u, tau_arr, eta, bitgen) -> None:
        self._inplace(
            lambda y_, *rest: self.module.hsplus_sweep(y_, *rest),
            [self._arr(y), lam, u, tau_arr],
            float(eta), bitgen,
        )

    def laplace_sweep(self, y, theta, lam2, glob, xi, d2, bitgen) -> None:
        self._inplace(
            lambda y_, *rest: self.module.laplace_sweep(y_, *rest),
            [self._arr(y), theta, lam2, glob],
            float(xi), float(d2), bitgen,
        )

    # whole chains -----------------------------------------------------------
    def hs_chain(self, y, eta2, tau2_fixed, n_warmup, n_keep, bitgen):
        theta, aux = self._out(n_keep, len(y))
        self.module.hs_chain(self._vec(y), float(eta2), float(tau2_fixed), int(n_warmup),
                             int(n_keep), bitgen, theta, aux)
        return theta, aux

    def hsplus_chain(self, y, eta, n_warmup, n_keep, bitgen):
        theta, aux = self._out(n_keep, len(y))
        self.module.hsplus_chain(self._vec(y), float(eta), int(n_warmup), int(n_keep),
                                 bitgen, theta, aux)
        return theta, aux

    def laplace_chain(self, y, xi, d2, n_warmup, n_keep, bitgen):
        theta, aux = self._out(n_keep, len(y))
        self.module.laplace_chain(self._vec(y), float(xi), float(d2), int(n_warmup),
                                  int(n_keep), bitgen, theta, aux)
        return theta, aux

    def global_chain(self, y, eta2, n_warmup, n_keep, bitgen):
        theta, aux = self._out(n_keep, len(y))
        self.module.global_chain(self._vec(y), float(eta2), int(n_warmup), int(n_keep),
                                 bitgen, theta, aux)
        return theta, aux

    def normal_draws(self, y, sigma2, n_keep, bitgen):
        theta, aux = self._out(n_keep, len(y))
        self.module.normal_draws(self._vec(y), float(sigma2), int(n_keep), bitgen, theta, aux)
        return theta, aux

    def t_slice_chain(self, Y, df, code, hyp, n_warmup, n_keep, bitgen):
        Y = self._arr(Y)
        theta, aux = self._out(n_keep, Y.shape[1])
        hyp = self._arr(hyp)
        if self._compiled:
            self.module.t_slice_chain(Y, float(df), int(code), hyp, int(n_warmup), int(n_keep),
                                      bitgen, theta, aux)
        else:
            self.module.t_slice_chain(Y.tolist(), float(df), int(code), hyp.tolist(),
                                      int(n_warmup), int(n_keep), bitgen, theta, aux)
        return theta, aux


_compiled_module = _load_compiled()
PYTHON = KernelSet(_pykernels, "python")
COMPILED = KernelSet(_compiled_module, "compiled") if _compiled_module is not None else None
#: name of the backend chosen at import
BACKEND = "compiled" if COMPILED is not None else "python"


def get_backend(name: str | None = None) -> KernelSet:
    """Kernel set by name (``"compiled"`` or ``"python"``); default is the import-time choice."""
    if name is None:
        name = BACKEND
    if name == "python":
        return PYTHON
    if name == "compiled":
        if COMPILED is None:
            raise RuntimeError("compiled kernels are not available")
        return COMPILED
    raise ValueError(f"unknown kernel backend {name!r}")

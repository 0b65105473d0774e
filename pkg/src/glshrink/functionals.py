"""The four scalar quantities of interest evaluated on mean vectors."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .draws import DrawMatrix
from .model import FunctionalSpec

__all__ = ["FunctionalValue", "evaluate_functional", "psi_array", "map_draws"]


@dataclass(frozen=True)
class FunctionalValue:
    value: float
    kind: str

    @property
    def is_undefined(self) -> bool:
        """True for the 0/0 ratio."""
        return math.isnan(self.value)


def _check_indices(spec: FunctionalSpec, p: int) -> tuple[int, int]:
    i, j = spec.component_indices
    if not (0 <= i < p and 0 <= j < p):
        raise IndexError(f"component indices {spec.component_indices} out of range for p = {p}")
    return i, j


def psi_array(spec: FunctionalSpec, theta) -> np.ndarray:
    """Vectorised evaluation over the last axis of ``theta``.

    ``theta`` may have any leading shape; the result drops the last axis.
    A zero denominator gives a signed infinity, and 0/0 gives NaN.
    """
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0:
        raise ValueError("theta must have at least one axis")
    if not np.all(np.isfinite(th)):
        raise ValueError("theta must be finite")
    kind = spec.kind
    if kind == "sum_sq":
        return np.einsum("...i,...i->...", th, th)
    if kind == "max":
        return th.max(axis=-1)
    i, j = _check_indices(spec, th.shape[-1])
    a, b = th[..., i], th[..., j]
    if kind == "product":
        return a * b
    if kind == "ratio":
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return a / b
    raise ValueError(f"unknown functional kind {kind!r}")


def evaluate_functional(spec: FunctionalSpec, theta) -> FunctionalValue:
    """Evaluate psi on a single theta vector.

    Examples
    --------
    >>> from glshrink.model import FunctionalSpec
    >>> evaluate_functional(FunctionalSpec("sum_sq"), [3.0, 4.0, 0.0]).value
    25.0
    """
    th = np.asarray(theta, dtype=float)
    if th.ndim != 1:
        raise ValueError("theta must be a vector")
    if spec.kind == "sum_sq":
        # fsum keeps the value exact-to-rounding for long vectors
        return FunctionalValue(math.fsum(float(v) * float(v) for v in th), spec.kind)
    return FunctionalValue(float(psi_array(spec, th)), spec.kind)


def map_draws(spec: FunctionalSpec, draws: DrawMatrix) -> DrawMatrix:
    """Attach psi draws to ``draws``; chain and iteration indexing is kept."""
    psi = psi_array(spec, draws.draws)
    return replace(draws, functional_draws=psi, functional_kind=spec.kind, meta=dict(draws.meta))

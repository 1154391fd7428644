"""Discrete Laguerre network used to compress the control-increment sequence.

Row ``i`` of :func:`basis_sequence` is ``L(i)``, and the increment applied
``i`` steps ahead of the current sample is ``L(i) @ eta``; ``L(0)`` drives the
increment applied right now.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LaguerreBasis:
    scale: float
    terms: int
    recursion_mat: np.ndarray
    initial_vec: np.ndarray

    @property
    def beta(self) -> float:
        return 1.0 - self.scale**2


def build_basis(scale: float, terms: int) -> LaguerreBasis:
    if not 0.0 <= scale < 1.0:
        raise ValueError(f"Laguerre scale must lie in [0, 1), got {scale!r}")
    if int(terms) != terms or terms < 1:
        raise ValueError(f"Laguerre terms must be a positive integer, got {terms!r}")
    terms = int(terms)
    a = float(scale)
    beta = 1.0 - a * a
    # entry (i, j) for i > j is (-a)^(i-j-1) * beta
    rec = np.diag(np.full(terms, a))
    for i in range(terms):
        for j in range(i):
            rec[i, j] = (-a) ** (i - j - 1) * beta
    init = np.sqrt(beta) * (-a) ** np.arange(terms)
    return LaguerreBasis(a, terms, rec, init)


def basis_sequence(basis: LaguerreBasis, horizon: int) -> np.ndarray:
    """Stack ``L(0) .. L(horizon-1)`` as rows, shape ``(horizon, terms)``."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon!r}")
    out = np.empty((horizon, basis.terms))
    vec = basis.initial_vec.copy()
    for i in range(horizon):
        out[i] = vec
        vec = basis.recursion_mat @ vec
    return out


def expand_control(eta, basis: LaguerreBasis, steps: int) -> np.ndarray:
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.shape[0] != basis.terms:
        raise ValueError(f"eta has {eta.shape[0]} entries, basis has {basis.terms} terms")
    return basis_sequence(basis, steps) @ eta

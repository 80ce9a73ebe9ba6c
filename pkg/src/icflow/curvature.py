"""Admissible curvature functions of the principal curvatures.

Three families are provided, each symmetric, positively 1-homogeneous,
monotone and concave on its cone, and normalized so that F(1, ..., 1) = n:

    mean          F = sum kappa_i                        on  Gamma_1
    sigma_k_root  F = n (sigma_k / C(n,k))^(1/k)         on  Gamma_k
    quotient      F = (n k / (n-k+1)) sigma_k/sigma_k-1  on  Gamma_k

where sigma_k is the k-th elementary symmetric polynomial and Gamma_k is
the Garding cone {sigma_1 > 0, ..., sigma_k > 0}, the connected component
of {sigma_k > 0} containing the positive cone. The normalization constants
are the unique ones compatible with 1-homogeneity.

Evaluation and gradients are vectorized over leading axes: kappa may have
shape (..., n).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InadmissibleCurvatures

_EPS_DEN = 1e-300   # quotient denominator guard


@dataclass(frozen=True)
class CurvatureFunction:
    kind: str          # "mean" | "sigma_k_root" | "quotient"
    n: int
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("mean", "sigma_k_root", "quotient"):
            raise ValueError(f"unknown curvature function kind {self.kind!r}")
        if self.kind != "mean" and not (2 <= self.k <= self.n):
            raise ValueError(f"order k={self.k} requires 2 <= k <= n={self.n}")

    @property
    def cone_order(self) -> int:
        """Highest sigma_j required positive for cone membership."""
        return 1 if self.kind == "mean" else self.k


_NAMED = {"mean": ("mean", 1), "sigma2root": ("sigma_k_root", 2), "quotient2": ("quotient", 2)}


def from_name(name: str, n: int) -> CurvatureFunction:
    """Config-facing constructor: mean, sigma2root or quotient2."""
    if name not in _NAMED:
        raise ValueError(f"unknown curvature function name {name!r}; expected one of {sorted(_NAMED)}")
    kind, k = _NAMED[name]
    return CurvatureFunction(kind=kind, n=n, k=k)


def elementary_symmetric(kappa: np.ndarray) -> np.ndarray:
    """All sigma_j(kappa), j = 0..n, along the last axis: shape (..., n+1)."""
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1]
    e = np.zeros(kappa.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        ki = kappa[..., i]
        for j in range(min(i + 1, n), 0, -1):
            e[..., j] = e[..., j] + ki * e[..., j - 1]
    return e


def elementary_symmetric_deleted(kappa: np.ndarray, e: np.ndarray) -> np.ndarray:
    """sigma_j of kappa with entry i removed: shape (..., n+1, n).

    Uses the recursion sigma_j(kappa\\i) = sigma_j - kappa_i sigma_j-1(kappa\\i).
    """
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1]
    d = np.zeros(kappa.shape[:-1] + (n + 1, n))
    d[..., 0, :] = 1.0
    for j in range(1, n + 1):
        d[..., j, :] = e[..., j, None] - kappa * d[..., j - 1, :]
    return d


def cone_contains(f: CurvatureFunction, kappa) -> np.ndarray:
    """Membership in Gamma(F), elementwise over leading axes."""
    kappa = np.asarray(kappa, dtype=float)
    e = elementary_symmetric(kappa)
    ok = np.ones(kappa.shape[:-1], dtype=bool)
    for j in range(1, f.cone_order + 1):
        ok &= e[..., j] > 0.0
    return ok


def cone_margin(f: CurvatureFunction, kappa) -> np.ndarray:
    """min_j sigma_j over the cone-defining inequalities; negative outside."""
    kappa = np.asarray(kappa, dtype=float)
    e = elementary_symmetric(kappa)
    return np.min(e[..., 1:f.cone_order + 1], axis=-1)


def _require_admissible(f, kappa):
    ok = cone_contains(f, kappa)
    if not np.all(ok):
        bad = np.argwhere(~np.atleast_1d(ok))
        raise InadmissibleCurvatures(
            f"principal curvatures outside the admissibility cone of {f.kind} "
            f"(first offender at index {tuple(bad[0])})"
        )


def f_eval(f: CurvatureFunction, kappa) -> np.ndarray:
    """F(kappa); raises InadmissibleCurvatures outside the cone."""
    kappa = np.asarray(kappa, dtype=float)
    _require_admissible(f, kappa)
    e = elementary_symmetric(kappa)
    n = f.n
    if f.kind == "mean":
        return e[..., 1]
    if f.kind == "sigma_k_root":
        k = f.k
        return n * (e[..., k] / comb(n, k)) ** (1.0 / k)
    k = f.k
    den = np.maximum(e[..., k - 1], _EPS_DEN)
    return (n * k / (n - k + 1.0)) * e[..., k] / den


def f_grad(f: CurvatureFunction, kappa) -> np.ndarray:
    """Componentwise derivative dF/dkappa_i; all components positive on the
    cone and Euler's identity sum kappa_i dF/dkappa_i = F holds."""
    kappa = np.asarray(kappa, dtype=float)
    _require_admissible(f, kappa)
    e = elementary_symmetric(kappa)
    n = f.n
    if f.kind == "mean":
        return np.ones_like(kappa)
    d = elementary_symmetric_deleted(kappa, e)
    k = f.k
    if f.kind == "sigma_k_root":
        val = n * (e[..., k] / comb(n, k)) ** (1.0 / k)
        return (val / (k * e[..., k]))[..., None] * d[..., k - 1, :]
    c = n * k / (n - k + 1.0)
    skm1 = np.maximum(e[..., k - 1], _EPS_DEN)
    num = d[..., k - 1, :] * skm1[..., None] - e[..., k, None] * d[..., k - 2, :]
    return c * num / (skm1 * skm1)[..., None]

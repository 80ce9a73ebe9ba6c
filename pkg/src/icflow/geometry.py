"""Extrinsic geometry of star-shaped graphs over the sphere.

A hypersurface is the graph {(r(theta), theta)} in the warped background.
The radial gauge phi = integral_c^r ds/lambda flattens the metric so that
the induced metric, tilt factor and shape operator take the algebraic
forms

    g_ij    = lambda^2 (phi_i phi_j + sigma_ij)
    v^2     = 1 + |D phi|^2
    h_ij    = (lambda / v) (lambda' (phi_i phi_j + sigma_ij) - phi_ij)
    h^i_j   = (1 / (lambda v)) (lambda' delta^i_j - gtilde^ik phi_kj)

with gtilde^ij = sigma^ij - phi^i phi^j / v^2. Principal curvatures are
computed from the symmetric covariant pair (h_ij, g_ij) by a closed-form
2x2 generalized eigensolve, which keeps them real and avoids dividing by
sin^2(theta) near the poles. The raw operator is symmetrized through the
induced metric first, suppressing the O(h^2) asymmetry of the discrete
Hessian.

The ambient curvature enters through two contractions along the surface,
assembled from the warped-product coefficients; the scalar prefactor

    (lambda lambda'' + 1 - lambda'^2) / lambda = (m (n + 1) / 2) lambda^(-n)

is evaluated through the right-hand closed form since the left-hand
combination loses all significant digits at large radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import curvature as cf
from .background import WarpProfile
from .sphere import (
    ScalarField,
    SphereGrid,
    covariant_hess,
    grad_components,
    grad_norm_sq,
    hessian_mixed,
)


@dataclass
class GraphState:
    """The evolving surface at one instant: gauge field, radius and time."""

    t: float
    grid: SphereGrid
    phi: ScalarField
    r: ScalarField
    profile: WarpProfile
    base_radius: float


def gauge_to_radius(profile: WarpProfile, phi: ScalarField, c: float) -> ScalarField:
    """Invert the radial gauge nodewise."""
    r = profile.radius_from_gauge(phi.values, c)
    return ScalarField(phi.grid, r, t=phi.t)


def state_from_radius(grid, profile, r_values, t=0.0, base_radius=None) -> GraphState:
    r_values = np.asarray(r_values, dtype=float)
    if base_radius is None:
        base_radius = float(np.min(r_values))
    phi = profile.gauge_from_radius(r_values, base_radius)
    return GraphState(
        t=float(t), grid=grid,
        phi=ScalarField(grid, phi, t=t),
        r=ScalarField(grid, r_values, t=t),
        profile=profile, base_radius=float(base_radius),
    )


def state_from_gauge(grid, profile, phi_values, base_radius, t=0.0) -> GraphState:
    phi = ScalarField(grid, np.asarray(phi_values, dtype=float), t=t)
    r = gauge_to_radius(profile, phi, base_radius)
    return GraphState(t=float(t), grid=grid, phi=phi, r=r,
                      profile=profile, base_radius=float(base_radius))


@dataclass
class ExtrinsicData:
    """Per-node extrinsic quantities of a graph state.

    All tensors are in (theta, psi) coordinates with trailing axes (2,) or
    (2, 2); axisymmetric grids simply carry zero psi entries.
    """

    v: np.ndarray
    grad_phi: np.ndarray           # covariant D_i phi, (..., 2)
    grad_phi_sq: np.ndarray        # |D phi|^2
    hess_phi_mixed: np.ndarray     # (1,1) Hessian of phi, (..., 2, 2)
    sigma: np.ndarray              # round metric components, (..., 2, 2)
    g_cov: np.ndarray              # induced metric, (..., 2, 2)
    g_inv: np.ndarray
    g_tilde_up: np.ndarray         # sigma^ij - phi^i phi^j / v^2
    h_cov: np.ndarray              # symmetrized second fundamental form
    h_mixed: np.ndarray            # g^ik h_kj
    kappa: np.ndarray              # principal curvatures, ascending, (..., 2)
    chi: np.ndarray                # lambda / v
    lam: np.ndarray
    lam_p: np.ndarray


def _inv22(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / det[..., None, None]


def _pencil_eigenvalues(a, b):
    """Ascending eigenvalues of the symmetric pencil a x = kappa b x with b
    positive definite (closed 2x2 form).

    The discriminant is expanded as
        (a00 b11 - a11 b00)^2 + 4 (a00 b01 - a01 b00)(a11 b01 - a01 b11),
    which vanishes to rounding at umbilic points where a is proportional
    to b; the textbook form mix^2 - 4 det a det b would leave an
    sqrt(eps)-sized spurious eigenvalue split there.
    """
    det_b = b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] ** 2
    mix = (a[..., 0, 0] * b[..., 1, 1] + a[..., 1, 1] * b[..., 0, 0]
           - 2.0 * a[..., 0, 1] * b[..., 0, 1])
    d1 = a[..., 0, 0] * b[..., 1, 1] - a[..., 1, 1] * b[..., 0, 0]
    d2 = a[..., 0, 0] * b[..., 0, 1] - a[..., 0, 1] * b[..., 0, 0]
    d3 = a[..., 1, 1] * b[..., 0, 1] - a[..., 0, 1] * b[..., 1, 1]
    disc = np.sqrt(np.maximum(d1 * d1 + 4.0 * d2 * d3, 0.0))
    lo = (mix - disc) / (2.0 * det_b)
    hi = (mix + disc) / (2.0 * det_b)
    return np.stack([lo, hi], axis=-1)


def _sigma_components(grid):
    s2 = grid.sin_theta ** 2
    sig = np.zeros(grid.field_shape + (2, 2))
    sig[..., 0, 0] = 1.0
    sig[..., 1, 1] = s2
    return sig


def compute_extrinsic(state: GraphState) -> ExtrinsicData:
    grid = state.grid
    prof = state.profile
    lam = prof.lambda_of_r(state.r.values)
    lam_p = prof.lambda_p_of_lambda(lam)

    dphi = grad_components(state.phi)                 # covariant (..., 2)
    q = grad_norm_sq(state.phi)
    v = np.sqrt(1.0 + q)
    hess_cov = covariant_hess(state.phi)

    sig = _sigma_components(grid)
    s2 = grid.sin_theta ** 2

    # contravariant gradient
    up = np.empty_like(dphi)
    up[..., 0] = dphi[..., 0]
    up[..., 1] = dphi[..., 1] / s2

    pp = dphi[..., :, None] * dphi[..., None, :]      # phi_i phi_j
    g_cov = (lam * lam)[..., None, None] * (pp + sig)

    h_raw = (lam / v)[..., None, None] * (lam_p[..., None, None] * (pp + sig) - hess_cov)
    h_cov = 0.5 * (h_raw + np.swapaxes(h_raw, -1, -2))
    kappa = _pencil_eigenvalues(h_cov, g_cov)

    g_inv = _inv22(g_cov)
    h_mixed = np.einsum("...ik,...kj->...ij", g_inv, h_cov)

    gt = np.empty_like(sig)
    gt[..., 0, 0] = 1.0 - up[..., 0] * up[..., 0] / (v * v)
    gt[..., 1, 1] = 1.0 / s2 - up[..., 1] * up[..., 1] / (v * v)
    gt[..., 0, 1] = -up[..., 0] * up[..., 1] / (v * v)
    gt[..., 1, 0] = gt[..., 0, 1]

    return ExtrinsicData(
        v=v, grad_phi=dphi, grad_phi_sq=q,
        hess_phi_mixed=hessian_mixed(state.phi),
        sigma=sig, g_cov=g_cov, g_inv=g_inv, g_tilde_up=gt,
        h_cov=h_cov, h_mixed=h_mixed, kappa=kappa,
        chi=lam / v, lam=lam, lam_p=lam_p,
    )


def ambient_contractions(state: GraphState, ext: ExtrinsicData):
    """The two ambient curvature contractions along the surface.

    Returns covariant (..., 2, 2) tensors: the normal-normal contraction
    R(X_i, nu, X_j, nu), and R(nu, X_i, (lambda d_r)^T, X_j).
    """
    prof = state.profile
    m, n = prof.params.m, prof.params.n
    lam, lam_p = ext.lam, ext.lam_p
    lam_pp = prof.lambda_pp_of_lambda(lam)
    q, v = ext.grad_phi_sq, ext.v
    sig = ext.sigma
    r_i = lam[..., None] * ext.grad_phi
    rr = r_i[..., :, None] * r_i[..., None, :]

    lp2m1 = lam_p * lam_p - 1.0
    c_a = lam * lam_pp + lp2m1 * q
    c_b = 2.0 * lam_pp / lam - lp2m1 / lam ** 2 + (lam_pp / lam) * q
    t_normal = -(1.0 / (v * v))[..., None, None] * (
        c_a[..., None, None] * sig + c_b[..., None, None] * rr
    )

    prefactor = 0.5 * m * (n + 1) * lam ** (-n)      # (lam lam'' + 1 - lam'^2)/lam
    t_radial = (prefactor / v ** 3)[..., None, None] * (
        rr - (lam * lam * q)[..., None, None] * sig
    )
    return t_normal, t_radial


def shape_gradient_tensor(F: cf.CurvatureFunction, ext: ExtrinsicData):
    """dF/dh as a contravariant 2-tensor F^ij, from the 2x2 spectral calculus.

    F^i_j shares eigenvectors with the scaled shape operator; writing it as
    alpha I + beta h-tilde reproduces the eigenvalue derivatives exactly,
    with beta -> 0 at umbilic points. Indices are then raised with gtilde.
    """
    lam = ext.lam
    kt = lam[..., None] * ext.kappa                   # eigenvalues of lam h
    f = cf.f_grad(F, kt)
    gap = kt[..., 1] - kt[..., 0]
    safe = np.abs(gap) > 1e-9 * (1.0 + np.abs(kt).max(axis=-1))
    beta = np.where(safe, (f[..., 1] - f[..., 0]) / np.where(safe, gap, 1.0), 0.0)
    alpha = f[..., 0] - beta * kt[..., 0]
    ht_mixed = lam[..., None, None] * ext.h_mixed
    eye = np.zeros_like(ht_mixed)
    eye[..., 0, 0] = 1.0
    eye[..., 1, 1] = 1.0
    f_mixed = alpha[..., None, None] * eye + beta[..., None, None] * ht_mixed
    return np.einsum("...ik,...jk->...ij", ext.g_tilde_up, f_mixed)


def contraction_consistency_residual(state: GraphState, F: cf.CurvatureFunction) -> float:
    """Sup residual of the contracted curvature identity

        chi^-1 F^ij R(nu, X_i, lambda d_r, X_j) = -(lambda''/lambda) F^ij g_ij.

    The left side is assembled from the two ambient contractions with the
    closed-form radial prefactor, the right side from the warp accessors;
    agreement at rounding level requires the closed forms to be mutually
    consistent, so a corrupted lambda'' breaks the identity.
    """
    ext = compute_extrinsic(state)
    t_normal, t_radial = ambient_contractions(state, ext)
    f_up = shape_gradient_tensor(F, ext)
    lam = ext.lam
    lam_pp = state.profile.lambda_pp_of_lambda(lam)
    lhs = (np.einsum("...ij,...ij->...", f_up, t_radial) / ext.chi
           + np.einsum("...ij,...ij->...", f_up, t_normal))
    rhs = -(lam_pp / lam) * np.einsum("...ij,...ij->...", f_up, ext.g_cov)
    return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs))))


def tilt_gradient_residual(state: GraphState) -> float:
    """Sup defect of D_i v = v^-1 phi^k phi_ki (round-metric derivatives)."""
    ext = compute_extrinsic(state)
    grid = state.grid
    v_field = ScalarField(grid, ext.v, t=state.t)
    lhs = grad_components(v_field)
    s2 = grid.sin_theta ** 2
    up = np.empty_like(ext.grad_phi)
    up[..., 0] = ext.grad_phi[..., 0]
    up[..., 1] = ext.grad_phi[..., 1] / s2
    hess_cov = covariant_hess(state.phi)
    rhs = np.einsum("...k,...ki->...i", up, hess_cov) / ext.v[..., None]
    return float(np.max(np.abs(lhs - rhs)))


def tilt_gradient_shape_residual(state: GraphState) -> float:
    """Sup defect of D_k v = (lambda'/lambda) v r_k - v^2 h^i_k r_i."""
    ext = compute_extrinsic(state)
    grid = state.grid
    v_field = ScalarField(grid, ext.v, t=state.t)
    lhs = grad_components(v_field)
    r_i = ext.lam[..., None] * ext.grad_phi
    rhs = ((ext.lam_p / ext.lam) * ext.v)[..., None] * r_i \
        - (ext.v ** 2)[..., None] * np.einsum("...ik,...i->...k", ext.h_mixed, r_i)
    return float(np.max(np.abs(lhs - rhs)))

"""Stability-preserving transformations for projected stochastic systems.

A dissipative descriptor system (E symmetric positive definite, A + A^T
negative definite) stays asymptotically stable under any one-sided projection
with full-rank V.  None of the benchmark systems are dissipative as built, so
three transformations manufacture that structure:

  technique i    multiply the projection basis by the Lyapunov solution of
                 the projected system, computed matrix-free in the frequency
                 domain;
  technique ii   transform every parameter realization by its own Lyapunov
                 solution and re-project with positive-weight quadrature;
  technique iii  reuse a single Lyapunov solution at a reference parameter
                 blockwise, which is exact for the constant family and
                 degrades continuously as the parameter spread grows.

Also here: the two-parameter regularization that turns an index-1
differential-algebraic system into a nearby ordinary one.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .frequency import FrequencyRule, default_rule
from .galerkin import (GalerkinSystem, assemble, assemble_output,
                       assemble_via_quadrature)
from .lyapunov import freq_projection, solve_lyap_direct
from .pce import PCBasis, QuadratureRule
from .systems import AffineParamSystem, eval_at

DEFAULT_BETA = 1e-5


@dataclass(frozen=True)
class RegularizationParams:
    """Shift pair (alpha, beta) with alpha tied to beta squared."""

    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def alpha(self) -> float:
        return self.beta ** 2


def regularize(E, A, beta: float = DEFAULT_BETA):
    """Replace (E, A) by (E - alpha A, A + beta E) with alpha = beta^2.

    For an index-1 pencil this removes the infinite eigenvalues while moving
    the finite ones only O(beta); the perturbed system is an ordinary
    differential equation whenever E - alpha A is nonsingular.
    """
    params = RegularizationParams(beta)
    alpha = params.alpha
    E_reg = E - alpha * A
    A_reg = A + beta * E
    return E_reg, A_reg


def regularize_affine(aps: AffineParamSystem, beta: float = DEFAULT_BETA) -> AffineParamSystem:
    """Apply the regularization to every affine term of the family.

    The shift acts term by term, so regularizing the family and evaluating
    at mu equals evaluating first and regularizing then; the same holds for
    the spectral projection.
    """
    params = RegularizationParams(beta)
    alpha = params.alpha

    def combo(X, Y, c):
        # X + c * Y with None meaning zero
        if Y is None:
            return None if X is None else X.copy()
        if X is None:
            return c * Y
        return X + c * Y

    E0 = aps.E0 - alpha * aps.A0
    A0 = aps.A0 + beta * aps.E0
    E_parts = tuple(combo(e, a, -alpha) for e, a in zip(aps.E_parts, aps.A_parts))
    A_parts = tuple(combo(a, e, beta) for a, e in zip(aps.A_parts, aps.E_parts))
    return AffineParamSystem(
        E0=E0, A0=A0, B0=aps.B0, C0=aps.C0,
        E_parts=E_parts, A_parts=A_parts,
        B_parts=aps.B_parts, C_parts=aps.C_parts,
        dists=aps.dists,
    )


@dataclass(eq=False)
class StabilizationOutcome:
    """Result of one stabilizing transformation.

    Exactly one of W (a replacement left-projection factor) and transformed
    (a re-assembled projected system) is set, depending on the technique.
    """

    technique: str
    W: np.ndarray | None = None
    transformed: GalerkinSystem | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.W is None) == (self.transformed is None):
            raise ValueError("exactly one of W and transformed must be set")


def _default_F(dim):
    return sp.identity(dim, format="csr")


def technique_i(gal: GalerkinSystem, V, rule: FrequencyRule | None = None,
                F=None) -> StabilizationOutcome:
    """Left factor W = M E V from the projected system's Lyapunov solution.

    M solves A^T M E + E^T M A + F = 0 for the projected pencil, which must
    be asymptotically stable.  W is computed by frequency-domain quadrature
    with one sparse factorization per node and is returned unnormalized.
    """
    if rule is None:
        rule = default_rule()
    if F is None:
        F = _default_F(gal.dim)
    t0 = time.perf_counter()
    W = freq_projection(gal.E, gal.A, F, V, rule)
    elapsed = time.perf_counter() - t0
    return StabilizationOutcome(
        technique="i", W=W,
        diagnostics={"nodes": rule.n_nodes, "seconds": elapsed,
                     "omega_scale": rule.omega_scale})


def technique_ii(aps: AffineParamSystem, basis: PCBasis, quad: QuadratureRule,
                 F=None) -> StabilizationOutcome:
    """Per-realization Lyapunov transform followed by quadrature projection.

    At every node mu_k the matrices are replaced by E^T M E, E^T M A, E^T M B
    with M = M(mu_k) solving the local Lyapunov equation; the transformed
    realization is dissipative by construction, and any positive-weight
    quadrature sum of dissipative realizations stays dissipative.  The output
    matrix is untouched by the transform, so the exact projected C is
    attached.
    """
    n = aps.n
    if F is None:
        F = np.eye(n)
    F = np.asarray(F if not sp.issparse(F) else F.toarray(), dtype=float)
    if F.shape != (n, n):
        raise ValueError("F must match the state dimension of the family")

    def transformed_matrices(mu):
        sys_mu = eval_at(aps, mu)
        M = solve_lyap_direct(sys_mu.E, sys_mu.A, F)
        Ed = sys_mu.E if not sp.issparse(sys_mu.E) else sys_mu.E.toarray()
        Ad = sys_mu.A if not sp.issparse(sys_mu.A) else sys_mu.A.toarray()
        Bd = sys_mu.B if not sp.issparse(sys_mu.B) else sys_mu.B.toarray()
        EtM = np.asarray(Ed).T @ M
        return EtM @ Ad, EtM @ Bd, EtM @ Ed

    t0 = time.perf_counter()
    C_exact = assemble_output(aps, basis)
    gal_t = assemble_via_quadrature(transformed_matrices, basis, quad,
                                    C=C_exact, provenance="technique-ii")
    elapsed = time.perf_counter() - t0
    return StabilizationOutcome(
        technique="ii", transformed=gal_t,
        diagnostics={"nodes": quad.k, "seconds": elapsed})


def technique_iii(gal: GalerkinSystem, aps: AffineParamSystem, V,
                  mu_star=None, F=None) -> StabilizationOutcome:
    """Blockwise left factor from one Lyapunov solution at a reference point.

    W = (I (x) M*) E V with M* solving the Lyapunov equation of the
    realization at mu_star (the parameter means by default).  The margin
    lambda_max(E^T (I (x) M*) A + transpose) is reported in the diagnostics;
    a negative margin certifies that every reduction from (W, V) is stable.
    """
    if mu_star is None:
        mu_star = aps.nominal()
    mu_star = np.atleast_1d(np.asarray(mu_star, dtype=float))
    n = aps.n
    if F is None:
        F = np.eye(n)
    t0 = time.perf_counter()
    sys_star = eval_at(aps, mu_star)
    M_star = solve_lyap_direct(sys_star.E, sys_star.A, F)

    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] == 1 and gal.dim != 1:
        V = V.T
    if V.shape[0] != gal.dim:
        raise ValueError("V must have m*n rows")
    EV = np.asarray(gal.E @ V)
    r = V.shape[1]
    blocks = EV.reshape(gal.m, n, r)
    W = np.einsum("ij,bjr->bir", M_star, blocks).reshape(gal.dim, r)

    margin = _technique_iii_margin(gal, M_star)
    elapsed = time.perf_counter() - t0
    return StabilizationOutcome(
        technique="iii", W=W,
        diagnostics={"margin": margin, "mu_star": mu_star.tolist(),
                     "seconds": elapsed})


def _technique_iii_margin(gal: GalerkinSystem, M_star: np.ndarray) -> float:
    """Largest eigenvalue of E^T (I (x) M*) A + (E^T (I (x) M*) A)^T."""
    M_big = sp.kron(sp.identity(gal.m, format="csr"),
                    sp.csr_matrix(M_star), format="csr")
    E_s = sp.csr_matrix(gal.E)
    A_s = sp.csr_matrix(gal.A)
    T = (E_s.T @ M_big) @ A_s
    S = (T + T.T).tocsc()
    dim = gal.dim
    if dim < 2000:
        return float(sla.eigvalsh(S.toarray())[-1])
    val = spla.eigsh(S, k=1, which="LA", return_eigenvectors=False)
    return float(val[0])


def theta_family(aps: AffineParamSystem, theta: float) -> AffineParamSystem:
    """Shrink the parameter spread toward the means by a factor theta in [0, 1].

    Realizations of the returned family at mu match the original family at
    mu_bar + theta * (mu - mu_bar).  The distributions are kept; the affine
    terms are rescaled, with the displaced mass folded into the constant
    part.  At theta = 0 every realization equals the mean realization.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    mu_bar = aps.nominal()

    def shift_const(const, parts):
        total = const.copy()
        for l, part in enumerate(parts):
            if part is not None:
                total = total + (1.0 - theta) * mu_bar[l] * part
        return total

    def scale_parts(parts):
        return tuple(None if p is None else theta * p for p in parts)

    return AffineParamSystem(
        E0=shift_const(aps.E0, aps.E_parts),
        A0=shift_const(aps.A0, aps.A_parts),
        B0=shift_const(aps.B0, aps.B_parts),
        C0=shift_const(aps.C0, aps.C_parts),
        E_parts=scale_parts(aps.E_parts),
        A_parts=scale_parts(aps.A_parts),
        B_parts=scale_parts(aps.B_parts),
        C_parts=scale_parts(aps.C_parts),
        dists=aps.dists,
    )


@dataclass(frozen=True)
class CommutationReport:
    equal: bool
    max_diff_E: float
    max_diff_A: float
    tol: float


def regularization_commutes(aps: AffineParamSystem, basis: PCBasis,
                            beta: float = DEFAULT_BETA, beta_other: float | None = None,
                            tol: float = 1e-12) -> CommutationReport:
    """Compare regularize-then-project against project-then-regularize.

    Both paths must agree to machine precision when the same beta is used;
    beta_other deliberately desynchronizes the second path for negative
    controls.  The comparison is entrywise on the projected E and A, scaled
    by the larger matrix norm.
    """
    gal_first = assemble(regularize_affine(aps, beta), basis)
    gal_plain = assemble(aps, basis)
    b2 = beta if beta_other is None else beta_other
    E2, A2 = regularize(gal_plain.E, gal_plain.A, b2)

    def rel_max_diff(X, Y):
        D = (X - Y).tocoo() if sp.issparse(X) else np.asarray(X - Y)
        diff = np.abs(D.data).max() if sp.issparse(X) and D.nnz else (
            0.0 if sp.issparse(X) else np.abs(D).max())
        scale = max(_spnorm(X), _spnorm(Y), 1e-300)
        return diff / scale

    dE = rel_max_diff(gal_first.E, E2)
    dA = rel_max_diff(gal_first.A, A2)
    return CommutationReport(equal=bool(dE <= tol and dA <= tol),
                             max_diff_E=float(dE), max_diff_A=float(dA), tol=tol)


def _spnorm(X) -> float:
    if sp.issparse(X):
        data = X.tocoo().data
        return float(np.abs(data).max()) if data.size else 0.0
    X = np.asarray(X)
    return float(np.abs(X).max()) if X.size else 0.0

"""Spectral projection of parameter-affine systems onto a chaos basis.

The projected system couples all chaos coefficients of the state into one
deterministic descriptor system of dimension m * n.  Affine parameter
dependence yields an exact block assembly from moment matrices; arbitrary
(transformed) dependence is handled by quadrature over parameter nodes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .pce import PCBasis, QuadratureRule, eval_basis, moment_matrix
from .systems import AffineParamSystem, LTISystem


@dataclass(eq=False)
class GalerkinSystem:
    """Projected system with m chaos blocks of state dimension n each.

    Rows and columns are ordered block-wise by basis polynomial: block i
    holds the coefficient of basis function i.  The output matrix stacks the
    chaos coefficients of every original output, so n_out equals
    m * n_out_original.
    """

    E: object
    A: object
    B: object
    C: object
    m: int
    n: int
    provenance: str = "exact-affine"

    def __post_init__(self):
        mn = self.m * self.n
        if self.E.shape != (mn, mn) or self.A.shape != (mn, mn):
            raise ValueError("E and A must be (m*n) x (m*n)")
        if self.B.shape[0] != mn:
            raise ValueError("B must have m*n rows")
        if self.C.shape[1] != mn:
            raise ValueError("C must have m*n columns")

    @property
    def dim(self) -> int:
        return self.m * self.n

    @property
    def n_in(self) -> int:
        return self.B.shape[1]

    @property
    def n_out(self) -> int:
        return self.C.shape[0]

    def as_lti(self) -> LTISystem:
        return LTISystem(E=self.E, A=self.A, B=self.B, C=self.C)


def _coef_to_sparse(M):
    if sp.issparse(M):
        return M.tocsr()
    return sp.csr_matrix(np.atleast_2d(np.asarray(M, dtype=float)))


def _assemble_square(const, parts, Gs, m):
    total = sp.kron(Gs[0], _coef_to_sparse(const), format="csr")
    for l, part in enumerate(parts):
        if part is not None:
            total = total + sp.kron(Gs[l + 1], _coef_to_sparse(part), format="csr")
    return total.tocsr()


def assemble(aps: AffineParamSystem, basis: PCBasis) -> GalerkinSystem:
    """Exact projection of an affine family onto the chaos basis.

    E and A become sum_l G_l (x) M_l over the affine terms, with G_0 the
    identity pairing the constant part.  B collects the chaos coefficients
    of the affine input matrix, which live in the first column of each G_l.
    """
    if tuple(aps.dists) != tuple(basis.dists):
        raise ValueError("system parameters and basis distributions must match")
    m, n = basis.m, aps.n
    Gs = [moment_matrix(basis, l) for l in range(basis.q + 1)]
    E_hat = _assemble_square(aps.E0, aps.E_parts, Gs, m)
    A_hat = _assemble_square(aps.A0, aps.A_parts, Gs, m)
    C_hat = _assemble_square(aps.C0, aps.C_parts, Gs, m)

    B0 = np.atleast_2d(np.asarray(aps.B0 if not sp.issparse(aps.B0)
                                  else aps.B0.toarray(), dtype=float))
    e1 = np.zeros(m)
    e1[0] = 1.0
    B_hat = np.kron(e1[:, None], B0)
    for l, part in enumerate(aps.B_parts):
        if part is not None:
            Bl = np.atleast_2d(np.asarray(part if not sp.issparse(part)
                                          else part.toarray(), dtype=float))
            g_col = Gs[l + 1][:, [0]].toarray().ravel()
            B_hat = B_hat + np.kron(g_col[:, None], Bl)
    return GalerkinSystem(E=E_hat, A=A_hat, B=B_hat, C=C_hat, m=m, n=n,
                          provenance="exact-affine")


def assemble_output(aps: AffineParamSystem, basis: PCBasis):
    """Only the projected output matrix (exact, from moment matrices)."""
    if tuple(aps.dists) != tuple(basis.dists):
        raise ValueError("system parameters and basis distributions must match")
    Gs = [moment_matrix(basis, l) for l in range(basis.q + 1)]
    return _assemble_square(aps.C0, aps.C_parts, Gs, basis.m)


def assemble_via_quadrature(matrix_fn, basis: PCBasis, rule: QuadratureRule,
                            C=None, provenance: str = "quadrature") -> GalerkinSystem:
    """Projection of a general parameter dependence by numerical integration.

    matrix_fn maps a parameter vector to a tuple (A, B, E) of dense arrays.
    The projected blocks are weighted sums of S(mu_k) (x) A(mu_k) and
    s(mu_k) (x) B(mu_k) over the nodes; with positive weights this preserves
    definiteness properties that hold at every node.  C, if given, is
    attached unchanged (the output matrix of an untransformed family projects
    exactly, so callers pass the exact block matrix).
    """
    if rule.nodes.shape[1] != basis.q:
        raise ValueError("quadrature nodes and basis dimension differ")
    if np.any(rule.weights <= 0):
        raise ValueError("quadrature weights must be strictly positive")
    m = basis.m
    A_hat = B_hat = E_hat = None
    for k in range(rule.k):
        mu = rule.nodes[k]
        try:
            A_k, B_k, E_k = matrix_fn(mu)
        except Exception as exc:
            raise RuntimeError(f"matrix evaluation failed at node {k}: {exc}") from exc
        A_k = np.asarray(A_k, dtype=float)
        B_k = np.atleast_2d(np.asarray(B_k, dtype=float))
        E_k = np.asarray(E_k, dtype=float)
        if B_k.shape[0] == 1 and A_k.shape[0] != 1:
            B_k = B_k.T
        s = eval_basis(basis, mu)
        S = np.outer(s, s)
        w = rule.weights[k]
        if A_hat is None:
            n = A_k.shape[0]
            A_hat = np.zeros((m * n, m * n))
            E_hat = np.zeros((m * n, m * n))
            B_hat = np.zeros((m * n, B_k.shape[1]))
        A_hat += w * np.kron(S, A_k)
        E_hat += w * np.kron(S, E_k)
        B_hat += w * np.kron(s[:, None], B_k)
    if A_hat is None:
        raise ValueError("quadrature rule has no nodes")
    n = A_hat.shape[0] // m
    if C is None:
        C = np.zeros((0, m * n))
    return GalerkinSystem(E=E_hat, A=A_hat, B=B_hat, C=C, m=m, n=n,
                          provenance=provenance)


def qoi_stats(w_hat, basis: PCBasis | None = None):
    """Mean and variance encoded by one output's chaos coefficients.

    For an orthonormal basis with leading constant polynomial the mean is the
    first coefficient and the variance the sum of squares of the rest.
    """
    w_hat = np.asarray(w_hat, dtype=float).ravel()
    if basis is not None and w_hat.size != basis.m:
        raise ValueError(f"expected {basis.m} coefficients, got {w_hat.size}")
    mean = float(w_hat[0])
    var = float(np.dot(w_hat[1:], w_hat[1:]))
    return mean, var


def expand_qoi(basis: PCBasis, w_hat, mu) -> float:
    """Evaluate the chaos expansion sum_i w_i Phi_i(mu) at one point."""
    w_hat = np.asarray(w_hat, dtype=float).ravel()
    if w_hat.size != basis.m:
        raise ValueError(f"expected {basis.m} coefficients, got {w_hat.size}")
    return float(np.dot(w_hat, eval_basis(basis, mu)))

"""Generalized Lyapunov equations and frequency-domain projected solutions.

Solves A^T M E + E^T M A + F = 0 for stable pencils with nonsingular E.
Besides the dense direct solve there is a quadrature variant that never forms
M: it computes W = M E V directly from the integral representation
M = (1/2pi) int (i w E - A)^-H F (i w E - A)^-1 dw, which is what the
stabilizing projection matrices are built from.
"""

import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .frequency import FrequencyRule, default_rule
from .systems import AffineParamSystem, eval_at, pencil_spectrum

__all__ = [
    "FrequencyRule", "default_rule", "solve_lyap_direct", "solve_lyap_param",
    "freq_projection", "accuracy_bound", "lyap_residual",
]


def _dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)


def solve_lyap_direct(E, A, F, check_stability: bool = True) -> np.ndarray:
    """Dense solve of A^T M E + E^T M A + F = 0; returns symmetric M.

    Requires E nonsingular and, unless check_stability is disabled, verifies
    that the pencil (E, A) is asymptotically stable before factorizing.
    With F symmetric positive definite the solution M is symmetric positive
    definite as well.
    """
    Ed, Ad, Fd = _dense(E), _dense(A), _dense(F)
    n = Ed.shape[0]
    if Ed.shape != (n, n) or Ad.shape != (n, n) or Fd.shape != (n, n):
        raise ValueError("E, A, F must be square and equally sized")
    if np.linalg.norm(Fd - Fd.T) > 1e-10 * max(np.linalg.norm(Fd), 1e-300):
        raise ValueError("F must be symmetric")
    if check_stability:
        spectrum = pencil_spectrum(Ed, Ad)
        if spectrum.abscissa >= 0:
            raise ValueError(
                f"pencil is not asymptotically stable (abscissa {spectrum.abscissa:.3e})")
    with warnings.catch_warnings():
        # the diagonal test below reports singular E as a ValueError instead
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(Ed)
    diag = np.abs(np.diag(lu))
    if diag.min() <= 1e-14 * max(diag.max(), 1e-300):
        raise ValueError("E is numerically singular")
    # reduce to an ordinary Lyapunov equation in At = A E^-1
    At = sla.lu_solve((lu, piv), Ad.T, trans=1).T
    Ft = sla.lu_solve((lu, piv), sla.lu_solve((lu, piv), Fd.T, trans=1).T, trans=1)
    M = sla.solve_continuous_lyapunov(At.T, -Ft)
    return 0.5 * (M + M.T)


def solve_lyap_param(aps: AffineParamSystem, mu, F,
                     check_stability: bool = True) -> np.ndarray:
    """Solve the Lyapunov equation for the family instantiated at mu."""
    sys_mu = eval_at(aps, mu)
    try:
        return solve_lyap_direct(sys_mu.E, sys_mu.A, F,
                                 check_stability=check_stability)
    except ValueError as exc:
        raise ValueError(f"Lyapunov solve failed at mu = {np.asarray(mu)}: {exc}") from exc


def freq_projection(E, A, F, V, rule: FrequencyRule | None = None) -> np.ndarray:
    """W = M E V by frequency-domain quadrature, without forming M.

    Each node contributes Re[(i w E - A)^-H F (i w E - A)^-1 E V]; one LU
    factorization per node serves both the forward and the conjugate
    transposed solve.  The pencil (E, A) must be asymptotically stable with
    nonsingular E for the integral to equal the Lyapunov solution.
    """
    if rule is None:
        rule = default_rule()
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] == 1 and E.shape[0] != 1:
        V = V.T
    n = E.shape[0]
    if V.shape[0] != n:
        raise ValueError("V must have as many rows as E")
    sparse = sp.issparse(E) or sp.issparse(A)
    if sparse:
        Ec = sp.csc_matrix(E, dtype=complex)
        Ac = sp.csc_matrix(A, dtype=complex)
        Fc = sp.csc_matrix(F, dtype=complex) if sp.issparse(F) else np.asarray(F, dtype=complex)
    else:
        Ec = np.asarray(E, dtype=complex)
        Ac = np.asarray(A, dtype=complex)
        Fc = np.asarray(F, dtype=complex)
    EV = (Ec @ V).astype(complex)
    omegas, gw, jac = rule.half()
    W = np.zeros((n, V.shape[1]))
    for j, om in enumerate(omegas):
        K = (1j * om) * Ec - Ac
        try:
            if sparse:
                lu = spla.splu(K.tocsc())
                X = lu.solve(EV)
                Y = lu.solve(Fc @ X, trans="H")
            else:
                lu_piv = sla.lu_factor(K)
                X = sla.lu_solve(lu_piv, EV)
                Y = sla.lu_solve(lu_piv, Fc @ X, trans=2)
        except (RuntimeError, sla.LinAlgError, ValueError) as exc:
            raise ValueError(f"factorization failed at omega = {om}") from exc
        W += (gw[j] * jac[j]) * Y.real
    return W / (2.0 * np.pi)


def accuracy_bound(E, A) -> float:
    """Scale factor 1 / (||A^T|| ||E|| + ||A|| ||E^T||) in spectral norms.

    Multiplying an absolute quadrature error for M by this factor's inverse
    bounds the residual of the Lyapunov equation; it is a cheap
    conditioning indicator for the frequency-domain approach.
    """
    Ed, Ad = _dense(E), _dense(A)
    na = np.linalg.norm(Ad, 2)
    ne = np.linalg.norm(Ed, 2)
    denom = 2.0 * na * ne
    if denom == 0.0:
        raise ValueError("bound undefined for zero E or A")
    return 1.0 / denom


def lyap_residual(E, A, F, M) -> float:
    """Relative residual ||A^T M E + E^T M A + F||_F / ||F||_F."""
    Ed, Ad, Fd, Md = _dense(E), _dense(A), _dense(F), _dense(M)
    R = Ad.T @ Md @ Ed + Ed.T @ Md @ Ad + Fd
    nF = np.linalg.norm(Fd)
    if nF == 0.0:
        raise ValueError("F must be nonzero")
    return float(np.linalg.norm(R) / nF)

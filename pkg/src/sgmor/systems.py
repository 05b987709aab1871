"""Linear time-invariant descriptor systems and parameter-affine families.

Covers the deterministic side of the pipeline: generalized eigenvalues of the
pencil (E, A), asymptotic stability, the dissipativity test (E symmetric
positive definite together with A + A^T negative definite), transfer-function
evaluation, and H2 norms computed by quadrature on the imaginary axis.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .frequency import (CONVERGENCE_RTOL, DEFAULT_NODES, MAX_NODES,
                        FrequencyRule)
from .pce import Distribution

# Pencil eigenvalues with |beta| below this multiple of max(||E||, ||A||)
# are classified as infinite.
INFINITE_EIG_RTOL = 1e-12

# Definiteness margin for the dissipativity test, relative to the matrix norm.
DEFINITENESS_RTOL = 1e-10


def _is_sparse(X) -> bool:
    return sp.issparse(X)


def _as_dense(X) -> np.ndarray:
    if sp.issparse(X):
        return X.toarray()
    return np.asarray(X)


@dataclass(eq=False)
class LTISystem:
    """Descriptor system E x' = A x + B u, y = C x.

    E and A are square n x n (dense or sparse), B is n x n_in, C is
    n_out x n.  E may be singular; the pencil (E, A) must be regular for
    any of the spectral routines to succeed.
    """

    E: object
    A: object
    B: object
    C: object

    def __post_init__(self):
        n = self.E.shape[0]
        if self.E.shape != (n, n) or self.A.shape != (n, n):
            raise ValueError("E and A must be square and equally sized")
        B = self.B
        if not sp.issparse(B):
            B = np.atleast_2d(np.asarray(B, dtype=float))
            if B.shape[0] == 1 and n != 1:
                B = B.T
            self.B = B
        C = self.C
        if not sp.issparse(C):
            C = np.atleast_2d(np.asarray(C, dtype=float))
            self.C = C
        if self.B.shape[0] != n:
            raise ValueError("B must have n rows")
        if self.C.shape[1] != n:
            raise ValueError("C must have n columns")

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def n_in(self) -> int:
        return self.B.shape[1]

    @property
    def n_out(self) -> int:
        return self.C.shape[0]


@dataclass(eq=False)
class AffineParamSystem:
    """Family of descriptor systems depending affinely on parameters.

    Each matrix is a constant part plus sum_l mu_l * part_l.  Coefficient
    entries may be None when a parameter does not touch that matrix.
    """

    E0: object
    A0: object
    B0: object
    C0: object
    E_parts: tuple
    A_parts: tuple
    B_parts: tuple
    C_parts: tuple
    dists: tuple

    def __post_init__(self):
        q = len(self.dists)
        for d in self.dists:
            if not isinstance(d, Distribution):
                raise TypeError("dists must contain Distribution instances")
        for name in ("E_parts", "A_parts", "B_parts", "C_parts"):
            parts = tuple(getattr(self, name))
            if len(parts) != q:
                raise ValueError(f"{name} must have one entry per parameter")
            setattr(self, name, parts)
        n = self.E0.shape[0]
        for M in (self.E0, self.A0):
            if M.shape != (n, n):
                raise ValueError("constant parts E0, A0 must be square")
        for name, base in (("E_parts", self.E0), ("A_parts", self.A0),
                           ("B_parts", self.B0), ("C_parts", self.C0)):
            for l, part in enumerate(getattr(self, name)):
                if part is not None and part.shape != base.shape:
                    raise ValueError(
                        f"{name}[{l}] shape {part.shape} does not match {base.shape}")

    @property
    def q(self) -> int:
        return len(self.dists)

    @property
    def n(self) -> int:
        return self.E0.shape[0]

    @property
    def n_in(self) -> int:
        return self.B0.shape[1]

    @property
    def n_out(self) -> int:
        return self.C0.shape[0]

    def nominal(self) -> np.ndarray:
        return np.array([d.mean for d in self.dists])


def _affine_sum(const, parts, mu):
    total = const.copy()
    for l, part in enumerate(parts):
        if part is not None:
            total = total + mu[l] * part
    return total


def eval_at(aps: AffineParamSystem, mu) -> LTISystem:
    """Instantiate the family at one parameter point."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.shape != (aps.q,):
        raise ValueError(f"expected parameter vector of length {aps.q}")
    return LTISystem(
        E=_affine_sum(aps.E0, aps.E_parts, mu),
        A=_affine_sum(aps.A0, aps.A_parts, mu),
        B=_affine_sum(aps.B0, aps.B_parts, mu),
        C=_affine_sum(aps.C0, aps.C_parts, mu),
    )


@dataclass(frozen=True, eq=False)
class PencilSpectrum:
    """Finite eigenvalues of a regular pencil plus infinite-mode bookkeeping."""

    finite: np.ndarray
    abscissa: float
    has_infinite: bool
    n_infinite: int


def pencil_spectrum(E, A, infinite_rtol: float = INFINITE_EIG_RTOL) -> PencilSpectrum:
    """Generalized eigenvalues of (E, A) via the QZ decomposition.

    Eigenvalue pairs (alpha, beta) with |beta| below
    infinite_rtol * max(||E||, ||A||) count as infinite.  A pair with both
    components below that threshold signals a singular pencil and raises.
    """
    Ed = _as_dense(E).astype(float)
    Ad = _as_dense(A).astype(float)
    n = Ed.shape[0]
    if Ed.shape != (n, n) or Ad.shape != (n, n):
        raise ValueError("E and A must be square and equally sized")
    alpha, beta = sla.eig(Ad, Ed, right=False, homogeneous_eigvals=True)
    scale = max(np.linalg.norm(Ed), np.linalg.norm(Ad), 1e-300)
    tol = infinite_rtol * scale
    tiny_beta = np.abs(beta) < tol
    tiny_alpha = np.abs(alpha) < tol
    if np.any(tiny_beta & tiny_alpha):
        raise ValueError("singular pencil: eigenvalue with alpha and beta both near zero")
    finite = alpha[~tiny_beta] / beta[~tiny_beta]
    n_infinite = int(np.count_nonzero(tiny_beta))
    if finite.size == 0:
        raise ValueError("pencil has no finite eigenvalues")
    return PencilSpectrum(
        finite=finite,
        abscissa=float(np.max(finite.real)),
        has_infinite=n_infinite > 0,
        n_infinite=n_infinite,
    )


def spectral_abscissa(E, A) -> float:
    return pencil_spectrum(E, A).abscissa


def is_asymptotically_stable(E, A, margin: float = 0.0) -> bool:
    """True when every finite eigenvalue satisfies Re(lambda) < -margin."""
    return pencil_spectrum(E, A).abscissa < -margin


@dataclass(frozen=True)
class DissipativityCheck:
    ok: bool
    reason: str | None = None
    lambda_min_E: float = np.nan
    lambda_max_symA: float = np.nan

    def __bool__(self):
        return self.ok


def is_dissipative(E, A, rtol: float = DEFINITENESS_RTOL) -> DissipativityCheck:
    """Test whether E is symmetric positive definite and A + A^T negative definite.

    Definiteness is decided with a margin of rtol times the spectral norm of
    the tested matrix, so numerically semidefinite cases fail the check.
    """
    Ed = _as_dense(E).astype(float)
    Ad = _as_dense(A).astype(float)
    sym_err = np.linalg.norm(Ed - Ed.T)
    if sym_err > 1e-10 * max(np.linalg.norm(Ed), 1e-300):
        return DissipativityCheck(ok=False, reason="E is not symmetric")
    lam_E = sla.eigvalsh(0.5 * (Ed + Ed.T))
    scale_E = max(np.abs(lam_E).max(), 1e-300)
    if lam_E[0] <= rtol * scale_E:
        return DissipativityCheck(
            ok=False, reason="E is not positive definite",
            lambda_min_E=float(lam_E[0]))
    S = Ad + Ad.T
    lam_S = sla.eigvalsh(S)
    scale_S = max(np.abs(lam_S).max(), 1e-300)
    if lam_S[-1] >= -rtol * scale_S:
        return DissipativityCheck(
            ok=False, reason="A + A^T is not negative definite",
            lambda_min_E=float(lam_E[0]), lambda_max_symA=float(lam_S[-1]))
    return DissipativityCheck(
        ok=True, lambda_min_E=float(lam_E[0]), lambda_max_symA=float(lam_S[-1]))


class _TransferEvaluator:
    """Factorizes (s E - A) once per frequency and applies C (.) B."""

    def __init__(self, sys: LTISystem):
        self.sys = sys
        self.sparse = _is_sparse(sys.E) or _is_sparse(sys.A)
        if self.sparse:
            self.Ec = sp.csc_matrix(sys.E, dtype=complex)
            self.Ac = sp.csc_matrix(sys.A, dtype=complex)
        else:
            self.Ec = _as_dense(sys.E).astype(complex)
            self.Ac = _as_dense(sys.A).astype(complex)
        self.Bd = _as_dense(sys.B).astype(complex)
        self.Cd = _as_dense(sys.C).astype(complex)

    def __call__(self, s: complex) -> np.ndarray:
        K = s * self.Ec - self.Ac
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                if self.sparse:
                    X = spla.splu(K.tocsc()).solve(self.Bd)
                else:
                    X = sla.solve(K, self.Bd)
        except (RuntimeError, sla.LinAlgError, ValueError) as exc:
            raise ValueError(f"(sE - A) is singular at s = {s}") from exc
        if not np.all(np.isfinite(X)):
            # diagonal fast paths in the solvers divide instead of raising
            raise ValueError(f"(sE - A) is singular at s = {s}")
        return self.Cd @ X


def transfer_eval(sys: LTISystem, s: complex) -> np.ndarray:
    """Transfer function H(s) = C (s E - A)^[-1] B at one point."""
    return _TransferEvaluator(sys)(s)


def transfer_on_grid(sys: LTISystem, omegas) -> np.ndarray:
    """H(i omega) stacked over a frequency grid, shape (k, n_out, n_in)."""
    ev = _TransferEvaluator(sys)
    omegas = np.asarray(omegas, dtype=float)
    out = np.empty((omegas.size, sys.n_out, sys.n_in), dtype=complex)
    for j, om in enumerate(omegas):
        out[j] = ev(1j * om)
    return out


class H2DivergenceError(RuntimeError):
    """Raised when the frequency-domain integrand grows toward the axis ends."""


def _check_divergence(integrand: np.ndarray):
    # For a strictly proper transfer function the theta-integrand levels off
    # near theta = pi/2; polynomial growth in omega makes it blow up across
    # the outermost nodes instead.
    if integrand.size < 4:
        return
    g = integrand[-3:]
    if g[2] > 4.0 * g[1] > 16.0 * g[0] and g[2] > np.mean(integrand):
        raise H2DivergenceError(
            "frequency-domain integrand grows at the largest nodes; "
            "the H2 norm appears to be infinite (improper or polynomial part)")


def _h2_quadrature(ev: _TransferEvaluator, rule: FrequencyRule) -> float:
    omegas, gw, jac = rule.half()
    vals = np.empty(omegas.size)
    for j, om in enumerate(omegas):
        H = ev(1j * om)
        vals[j] = np.linalg.norm(H, "fro") ** 2
    integrand = vals * jac
    _check_divergence(integrand)
    total = np.dot(gw, integrand) / (2.0 * np.pi)
    return float(np.sqrt(total))


def h2_norm(sys: LTISystem, freq_rule: FrequencyRule | None = None,
            omega_scale: float = 1.0, conv_rtol: float = CONVERGENCE_RTOL,
            max_nodes: int = MAX_NODES) -> float:
    """H2 norm sqrt((1/2pi) int ||H(i omega)||_F^2 d omega).

    With no explicit rule the node count starts at 200 and doubles until the
    relative change drops below conv_rtol or max_nodes is reached.  Diverging
    integrands (transfer functions that do not vanish at infinity) raise
    H2DivergenceError.
    """
    ev = _TransferEvaluator(sys)
    if freq_rule is not None:
        return _h2_quadrature(ev, freq_rule)
    n_nodes = DEFAULT_NODES
    prev = None
    while True:
        rule = FrequencyRule.gauss(n_nodes, omega_scale=omega_scale)
        val = _h2_quadrature(ev, rule)
        if prev is not None and abs(val - prev) <= conv_rtol * max(abs(val), 1e-300):
            return val
        if n_nodes >= max_nodes:
            warnings.warn(
                f"H2 quadrature did not converge within {max_nodes} nodes",
                RuntimeWarning)
            return val
        prev = val
        n_nodes *= 2


def h2_relative_error(fom: LTISystem, rom: LTISystem,
                      freq_rule: FrequencyRule | None = None,
                      omega_scale: float = 1.0) -> float:
    """Relative H2 error ||H - H_r|| / ||H|| on a shared frequency grid."""
    if fom.n_in != rom.n_in or fom.n_out != rom.n_out:
        raise ValueError("full and reduced systems must share input/output counts")
    rule = freq_rule if freq_rule is not None else FrequencyRule.gauss(
        DEFAULT_NODES, omega_scale=omega_scale)
    omegas, gw, jac = rule.half()
    ev_f = _TransferEvaluator(fom)
    ev_r = _TransferEvaluator(rom)
    num = 0.0
    den = 0.0
    for j, om in enumerate(omegas):
        Hf = ev_f(1j * om)
        Hr = ev_r(1j * om)
        wj = gw[j] * jac[j]
        num += wj * np.linalg.norm(Hf - Hr, "fro") ** 2
        den += wj * np.linalg.norm(Hf, "fro") ** 2
    if den <= 0.0:
        raise ValueError("reference system has zero H2 norm on this grid")
    return float(np.sqrt(num / den))


def time_domain_error_bound(h2_abs_error: float, input_l2_norm: float) -> float:
    """Uniform-in-time output error bound: H2 error times the input L2 norm.

    Valid for inputs vanishing at t = 0; the supremum over time of the output
    deviation is bounded by this product.
    """
    return float(h2_abs_error) * float(input_l2_norm)

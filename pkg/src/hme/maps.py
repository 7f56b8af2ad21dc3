"""Hermitian-preserving maps stored as unnormalised Choi matrices.

Conventions
-----------
The Choi matrix is ``Lambda = (id (x) N)|Phi+><Phi+|`` with ``|Phi+> = sum_i |ii>``.
Its first tensor factor is the input copy, the second the output copy, so
``Lambda[(i, a), (j, b)] = N(|i><j|)[a, b]``.  The Hamiltonian that realises
the map by exponentiation is the partial transpose on the input copy.

Superoperators use column stacking: ``vec(X)[a + d*b] = X[a, b]``.  Controlled
Hamiltonians order the evolved register as (control, target).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import (
    DimensionError,
    NotHermitianPreservingError,
    ParameterError,
    SingularMapError,
)

SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class HPMap:
    """Hermitian-preserving linear map from d_in x d_in to d_out x d_out matrices."""

    d_in: int
    d_out: int
    choi: np.ndarray = field(repr=False)
    source: dict | None = field(default=None, repr=False, compare=False)  # DSL tree, if parsed

    def __post_init__(self):
        choi = np.asarray(self.choi, dtype=complex)
        n = self.d_in * self.d_out
        if choi.shape != (n, n):
            raise DimensionError(f"Choi matrix must be {n}x{n}, got {choi.shape}")
        if not la.is_hermitian(choi):
            dev = np.max(np.abs(choi - la.dagger(choi)))
            raise NotHermitianPreservingError(
                f"Choi matrix is not Hermitian (max deviation {dev:.3e}); map is not Hermitian-preserving"
            )
        object.__setattr__(self, "choi", 0.5 * (choi + la.dagger(choi)))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_map(self, rho)

    @property
    def superop(self) -> np.ndarray:
        return choi_to_superop(self.choi, self.d_in, self.d_out)


@dataclass(frozen=True)
class Hamiltonian:
    """Hermitian operator on input (x) evolved space, with its cached operator norm."""

    mat: np.ndarray = field(repr=False)
    d_in: int
    d_out: int
    op_norm: float = -1.0

    def __post_init__(self):
        n = self.d_in * self.d_out
        mat = la.check_hermitian(self.mat, name="Hamiltonian")
        if mat.shape != (n, n):
            raise DimensionError(f"Hamiltonian must be {n}x{n}, got {mat.shape}")
        object.__setattr__(self, "mat", mat)
        if self.op_norm < 0:
            object.__setattr__(self, "op_norm", la.op_norm(mat))

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if (self.d_in, self.d_out) != (other.d_in, other.d_out):
            raise DimensionError("Hamiltonians act on different spaces")
        return Hamiltonian(self.mat + other.mat, self.d_in, self.d_out)


def choi_to_superop(choi: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    c4 = np.asarray(choi).reshape(d_in, d_out, d_in, d_out)
    return c4.transpose(3, 1, 2, 0).reshape(d_out * d_out, d_in * d_in)


def superop_to_choi(superop: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    s4 = np.asarray(superop).reshape(d_out, d_out, d_in, d_in)
    return s4.transpose(3, 1, 2, 0).reshape(d_in * d_out, d_in * d_out)


def apply_map(n: HPMap, rho: np.ndarray) -> np.ndarray:
    """Evaluate N(rho) = Tr_1[Lambda (rho^T (x) I)]."""
    rho = np.asarray(rho)
    if rho.shape != (n.d_in, n.d_in):
        raise DimensionError(f"map expects a {n.d_in}x{n.d_in} input, got {rho.shape}")
    c4 = n.choi.reshape(n.d_in, n.d_out, n.d_in, n.d_out)
    return np.einsum("iajb,ij->ab", c4, rho)


def hamiltonian_of(n: HPMap) -> Hamiltonian:
    """H = Lambda^{T_1}, the Hamiltonian whose exponentiation implements ``n``."""
    h = la.partial_transpose(n.choi, (n.d_in, n.d_out), 0)
    return Hamiltonian(h, n.d_in, n.d_out)


def is_hermitian_preserving(choi_candidate: np.ndarray, tol: float = la.HERMITIAN_TOL) -> bool:
    return la.is_hermitian(np.asarray(choi_candidate), tol)


# builders --------------------------------------------------------------------


def from_choi(matrix: np.ndarray, d_in: int | None = None, d_out: int | None = None) -> HPMap:
    """Wrap an explicit Choi matrix.  If dims are omitted the map is taken square."""
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]
    if d_in is None and d_out is None:
        d = int(round(np.sqrt(n)))
        if d * d != n:
            raise DimensionError(f"cannot infer square map dims from size {n}")
        d_in = d_out = d
    elif d_in is None:
        d_in = n // d_out
    elif d_out is None:
        d_out = n // d_in
    return HPMap(d_in, d_out, matrix)


def choi_from_kraus(terms, d_in: int | None = None) -> HPMap:
    """Map sum_k c_k K_k rho K_k^dagger from (real coefficient, operator) pairs."""
    terms = [(float(np.real(c)), np.atleast_2d(np.asarray(k, dtype=complex))) for c, k in terms]
    if not terms:
        raise ParameterError("need at least one Kraus term")
    d_out, d_in_k = terms[0][1].shape
    d_in = d_in_k if d_in is None else d_in
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for c, k in terms:
        if k.shape != (d_out, d_in):
            raise DimensionError("Kraus operators have inconsistent shapes")
        v = np.einsum("ai->ia", k).reshape(-1)  # sum_i |i> (x) K|i>
        choi += c * np.outer(v, v.conj())
    return HPMap(d_in, d_out, choi)


def identity(d: int) -> HPMap:
    return HPMap(d, d, la.phi_plus(d))


def transpose(d: int) -> HPMap:
    return HPMap(d, d, la.swap(d).astype(complex))


def sandwich(p: np.ndarray) -> HPMap:
    """rho -> P rho P^dagger for a rectangular P."""
    return choi_from_kraus([(1.0, p)])


def reduction(d: int) -> HPMap:
    """rho -> Tr(rho) I - rho."""
    return HPMap(d, d, np.eye(d * d, dtype=complex) - la.phi_plus(d))


def observable_map(o: np.ndarray) -> HPMap:
    """rho -> Tr(O rho) |1><1| onto a qubit."""
    o = la.check_hermitian(o, name="observable")
    p1 = np.diag([0.0, 1.0]).astype(complex)
    return HPMap(o.shape[0], 2, np.kron(o.T, p1))


def _check_gamma(gamma: float, allow_one: bool) -> float:
    gamma = float(gamma)
    upper_ok = gamma <= 1.0 if allow_one else gamma < 1.0
    if not (gamma >= 0.0 and upper_ok):
        raise ParameterError(f"damping rate out of range: {gamma}")
    return gamma


def amplitude_damping(gamma: float) -> HPMap:
    """Qubit amplitude damping with Kraus operators E0 = diag(1, sqrt(1-g)), E1 = sqrt(g)|0><1|."""
    gamma = _check_gamma(gamma, allow_one=True)
    e0 = np.diag([1.0, np.sqrt(1 - gamma)])
    e1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]])
    return choi_from_kraus([(1.0, e0), (1.0, e1)])


def amplitude_damping_inverse(gamma: float) -> HPMap:
    """Closed-form inverse of amplitude damping written as a signed Kraus sum."""
    if float(gamma) == 1.0:
        raise SingularMapError("amplitude damping with gamma = 1 is not invertible")
    gamma = _check_gamma(gamma, allow_one=False)
    f0 = np.diag([1.0, 1 / np.sqrt(1 - gamma)])
    f1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    return choi_from_kraus([(1.0, f0), (-gamma / (1 - gamma), f1)])


# algebra ---------------------------------------------------------------------


def tensor_maps(a: HPMap, b: HPMap) -> HPMap:
    """Map a (x) b acting on (A_in B_in) -> (A_out B_out)."""
    big = np.kron(a.choi, b.choi)  # order A_in A_out B_in B_out
    dims = (a.d_in, a.d_out, b.d_in, b.d_out)
    choi = la.permute_systems(big, dims, (0, 2, 1, 3))
    return HPMap(a.d_in * b.d_in, a.d_out * b.d_out, choi)


def compose_maps(a: HPMap, b: HPMap) -> HPMap:
    """Composition a after b."""
    if b.d_out != a.d_in:
        raise DimensionError(f"cannot compose: d_out(b)={b.d_out} but d_in(a)={a.d_in}")
    s = a.superop @ b.superop
    return HPMap(b.d_in, a.d_out, superop_to_choi(s, b.d_in, a.d_out))


def condition_number(a: HPMap) -> float:
    sv = np.linalg.svd(a.superop, compute_uv=False)
    return float(np.inf if sv[-1] == 0 else sv[0] / sv[-1])


def invert_map(a: HPMap) -> HPMap:
    """Inverse map through the superoperator; raises SingularMapError when it does not exist."""
    if a.d_in != a.d_out:
        raise DimensionError("only square maps can be inverted")
    s = a.superop
    sv = np.linalg.svd(s, compute_uv=False)
    if sv[-1] < SINGULAR_TOL:
        raise SingularMapError(
            f"superoperator is singular (smallest singular value {sv[-1]:.3e}, condition {sv[0] / max(sv[-1], 1e-300):.3e})"
        )
    inv = np.linalg.solve(s, np.eye(s.shape[0]))
    return HPMap(a.d_in, a.d_in, superop_to_choi(inv, a.d_in, a.d_in))


def partial_transpose_map(d_a: int, d_b: int) -> HPMap:
    """rho -> rho^{T_A} on C^{d_a} (x) C^{d_b}."""
    return tensor_maps(transpose(d_a), identity(d_b))


def partial_reduction(d_a: int, d_b: int) -> HPMap:
    """rho -> I_A (x) rho_B - rho."""
    return tensor_maps(reduction(d_a), identity(d_b))


# Hamiltonian utilities -------------------------------------------------------


def controlled_extension(h: Hamiltonian) -> Hamiltonian:
    """|1><1|_c (x) H, with the control placed first on the evolved side."""
    p1 = np.diag([0.0, 1.0])
    big = np.kron(p1, h.mat)  # order c, in, out
    mat = la.permute_systems(big, (2, h.d_in, h.d_out), (1, 0, 2))
    return Hamiltonian(mat, h.d_in, 2 * h.d_out, op_norm=h.op_norm)


def gauge_shift(h: Hamiltonian, m: np.ndarray) -> Hamiltonian:
    """H + M (x) I_out for Hermitian M on the input factor."""
    m = la.check_hermitian(m, name="gauge term")
    return Hamiltonian(h.mat + np.kron(m, np.eye(h.d_out)), h.d_in, h.d_out)


def hamiltonian_freedom_check(h1: Hamiltonian, h2: Hamiltonian, d_in: int, d_out: int, tol: float = 1e-9) -> bool:
    """True iff h1 - h2 = M (x) I_out for some Hermitian M."""
    n = d_in * d_out
    m1, m2 = np.asarray(getattr(h1, "mat", h1)), np.asarray(getattr(h2, "mat", h2))
    if m1.shape != (n, n) or m2.shape != (n, n):
        return False
    blocks = (m1 - m2).reshape(d_in, d_out, d_in, d_out).transpose(0, 2, 1, 3)
    scal = np.einsum("ijaa->ij", blocks) / d_out
    resid = blocks - scal[:, :, None, None] * np.eye(d_out)
    return bool(np.max(np.abs(resid), initial=0.0) <= tol and np.allclose(scal, scal.conj().T, atol=tol))


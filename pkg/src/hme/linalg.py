"""Dense complex linear algebra for small quantum systems.

Everything here works on plain ``numpy.ndarray`` objects.  Density matrices
carry their subsystem dimensions separately, as a tuple ``dims`` whose
product equals the matrix size.  Subsystems are numbered from 0.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DimensionError, NotHermitianError, NotDensityError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9


def _as_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or int(np.prod(dims)) != size:
        raise DimensionError(f"dims {dims} do not multiply to {size}")
    return dims


def _as_systems(which, n: int) -> tuple[int, ...]:
    systems = (which,) if np.isscalar(which) else tuple(which)
    systems = tuple(int(s) for s in systems)
    if any(s < 0 or s >= n for s in systems):
        raise DimensionError(f"subsystem index out of range: {systems}")
    return systems


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices or vectors."""
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m)), initial=0.0) <= tol


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    """Return the Hermitian part of ``m`` after checking it is Hermitian to ``tol``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    dev = np.max(np.abs(m - dagger(m)), initial=0.0)
    if dev > tol:
        raise NotHermitianError(f"{name} is not Hermitian (max deviation {dev:.3e})")
    return 0.5 * (m + dagger(m))


def partial_trace(m: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    m : ndarray
        Square matrix on the tensor product described by ``dims``.
    dims : sequence of int
        Subsystem dimensions.
    keep : int or sequence of int
        Subsystems to keep, in the order they appear in ``dims``.
    """
    m = np.asarray(m)
    dims = _as_dims(dims, m.shape[0])
    n = len(dims)
    keep = sorted(set(_as_systems(keep, n)))
    t = m.reshape(dims + dims)
    # contract traced pairs from the highest axis down so indices stay valid
    axes = list(range(n))
    for s in reversed(range(n)):
        if s in keep:
            continue
        cur = len(axes)
        pos = axes.index(s)
        t = np.trace(t, axis1=pos, axis2=pos + cur)
        axes.pop(pos)
    dk = int(np.prod([dims[s] for s in keep])) if keep else 1
    return t.reshape(dk, dk)


def partial_transpose(m: np.ndarray, dims: Sequence[int], which) -> np.ndarray:
    """Transpose the subsystems listed in ``which``.

    >>> partial_transpose(np.eye(4), (2, 2), 0).shape
    (4, 4)
    """
    m = np.asarray(m)
    dims = _as_dims(dims, m.shape[0])
    n = len(dims)
    systems = _as_systems(which, n)
    perm = list(range(2 * n))
    for s in systems:
        perm[s], perm[n + s] = n + s, s
    return m.reshape(dims + dims).transpose(perm).reshape(m.shape)


def permute_systems(m: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square matrix so that factor ``order[k]`` lands in slot k."""
    m = np.asarray(m)
    dims = _as_dims(dims, m.shape[0])
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DimensionError(f"{order} is not a permutation of {n} systems")
    t = m.reshape(dims + dims).transpose(order + [n + k for k in order])
    return t.reshape(m.shape)


def eigh(m: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises NotHermitianError when ``m`` deviates from Hermitian by more than ``tol``.
    """
    h = check_hermitian(m, tol)
    w, v = np.linalg.eigh(h)
    return w[::-1], v[:, ::-1]


def jacobi_eigh(m: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi eigensolver.

    Slow but independent of LAPACK; used as a cross-check for small matrices.
    Returns eigenvalues descending and the matching orthonormal eigenvectors.
    """
    a = check_hermitian(m).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol * scale / n:
                    continue
                # unitary rotation zeroing a[p, q]
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * np.arctan2(2 * abs(apq), aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[q, q] = c
                g[p, q] = s * phase
                g[q, p] = -s * np.conj(phase)
                a = dagger(g) @ a @ g
                v = v @ g
    w = np.real(np.diag(a))
    idx = np.argsort(w)[::-1]
    return w[idx], v[:, idx]


def herm_fn(m: np.ndarray, fn, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = eigh(m, tol)
    return (v * fn(w)) @ dagger(v)


def herm_exp(h: np.ndarray, t: float) -> np.ndarray:
    """Return exp(-i h t) for Hermitian ``h``."""
    return herm_fn(h, lambda w: np.exp(-1j * w * t))


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    return herm_fn(m, lambda w: np.sqrt(np.clip(w, 0.0, None)), tol=1e-8)


def op_norm(m: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    m = np.asarray(m)
    if is_hermitian(m, 1e-12):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + dagger(m))))))
    return float(np.linalg.norm(m, 2))


def trace_norm(m: np.ndarray) -> float:
    """Schatten-1 norm (sum of singular values)."""
    m = np.asarray(m)
    if is_hermitian(m, 1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + dagger(m))))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def frobenius_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))**2."""
    s = sqrtm_psd(sigma)
    w = np.linalg.eigvalsh(0.5 * (s @ rho @ s + dagger(s @ rho @ s)))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def as_density(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density matrix and return a cleaned copy.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero and the trace is
    renormalised.  Anything further from a state raises NotDensityError.
    """
    try:
        h = check_hermitian(m, tol, "density matrix")
    except NotHermitianError as exc:
        raise NotDensityError(str(exc)) from None
    tr = np.trace(h).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotDensityError(f"trace is {tr:.12g}, expected 1")
    w, v = np.linalg.eigh(h)
    if w[0] < -tol:
        raise NotDensityError(f"negative eigenvalue {w[0]:.3e}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        h = (v * w) @ dagger(v)
        h /= np.trace(h).real
    return h


def pure(psi: np.ndarray) -> np.ndarray:
    """Projector onto a normalised copy of the state vector ``psi``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise NotDensityError("zero state vector")
    psi = psi / nrm
    return np.outer(psi, psi.conj())


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def swap(d: int) -> np.ndarray:
    """SWAP operator on C^d (x) C^d."""
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


def phi_plus(d: int) -> np.ndarray:
    """Unnormalised maximally entangled projector sum_ij |ii><jj|."""
    v = np.eye(d).ravel()
    return np.outer(v, v).astype(complex)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state vector."""
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_hermitian(d: int, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
    """GUE-like Hermitian matrix, optionally rescaled to operator norm ``norm``."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (z + dagger(z))
    if norm is not None:
        h *= norm / op_norm(h)
    return h


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from the induced (Hilbert-Schmidt for full rank) measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real

"""Distances, entanglement measures, and the sample-complexity lower bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh as eigh_subset
from scipy.special import gammaln

from . import linalg as la
from .engine import ChannelRep
from .errors import DimensionError, PreconditionError
from .maps import HPMap, apply_map

# constant in the discrimination-based lower bound
LOWER_BOUND_C = 2 * math.log(1.8) / math.pi**2


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Unnormalised trace distance ||rho - sigma||_1 (between 0 and 2 for states)."""
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    return la.trace_norm(rho - sigma)


# diamond distance ------------------------------------------------------------


@dataclass(frozen=True)
class DiamondEstimate:
    lower: float
    upper: float
    witness: np.ndarray | None = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.upper - self.lower <= 1e-9


def _unitary_of(ch: ChannelRep, tol: float = 1e-9) -> np.ndarray | None:
    """Return U if ``ch`` is the unitary channel X -> U X U^dagger, else None."""
    c = ch.choi()
    w, v = np.linalg.eigh(0.5 * (c + la.dagger(c)))
    d = ch.d
    if abs(w[-1] - d) > tol * d or np.max(np.abs(w[:-1]), initial=0.0) > tol * d:
        return None
    # Choi = |v><v| with v = sum_i |i> (x) U|i>
    return np.sqrt(w[-1]) * v[:, -1].reshape(d, d).T


def hull_distance(points: np.ndarray) -> float:
    """Distance from the origin to the convex hull of points on the unit circle."""
    ang = np.sort(np.mod(np.angle(points), 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    g = float(np.max(gaps))
    if g <= np.pi:
        return 0.0
    # all points sit on an arc of width 2*pi - g; the nearest hull point is the chord midpoint
    return math.cos((2 * np.pi - g) / 2)


def unitary_diamond_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Closed form 2 sqrt(1 - nu^2) for channels of two unitaries."""
    ev = np.linalg.eigvals(la.dagger(u) @ v)
    nu = hull_distance(ev / np.abs(ev))
    return 2.0 * math.sqrt(max(0.0, 1.0 - nu * nu))


def _apply_ext(sup: np.ndarray, w: np.ndarray) -> np.ndarray:
    # ((Phi (x) id)(|psi><psi|)) for psi given as a d x d matrix w[a, r]
    d = w.shape[0]
    y = np.einsum("ar,bs->bars", w, w.conj()).reshape(d * d, d * d)
    z = (sup @ y).reshape(d, d, d, d)  # [e, c, r, s]
    return z.transpose(1, 2, 0, 3).reshape(d * d, d * d)


def _apply_ext_adjoint(sup: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = int(round(math.sqrt(sup.shape[0])))
    yt = y.reshape(d, d, d, d).transpose(2, 0, 1, 3).reshape(d * d, d * d)  # [(e, c), (r, s)]
    g = (sup.conj().T @ yt).reshape(d, d, d, d)  # [b, a, r, s]
    return g.transpose(1, 2, 0, 3).reshape(d * d, d * d)


def _ascent(sup: np.ndarray, w0: np.ndarray, tol: float, max_iter: int):
    """Alternating maximisation of ||(Phi (x) id)(|w><w|)||_1 from the start w0."""
    d = w0.shape[0]
    w = w0 / np.linalg.norm(w0)
    val = -1.0
    for _ in range(max_iter):
        x = _apply_ext(sup, w)
        ev, evec = np.linalg.eigh(0.5 * (x + la.dagger(x)))
        new = float(np.sum(np.abs(ev)))
        if new - val <= tol * max(1.0, new):
            val = max(val, new)
            break
        val = new
        g = _apply_ext_adjoint(sup, (evec * np.sign(ev)) @ la.dagger(evec))
        n = g.shape[0]
        _, top = eigh_subset(0.5 * (g + la.dagger(g)), subset_by_index=[n - 1, n - 1])
        w = top[:, 0].reshape(d, d)
    return val, w


def choi_upper_bound(diff: ChannelRep) -> float:
    """Upper envelope on the diamond norm of a Hermitian-preserving map from its Choi matrix.

    Uses min(||J||_1, ||Tr_out |J| ||_inf); both are valid upper bounds and the
    second is tight for differences of unitary channels up to a factor near 1.
    """
    j = diff.choi()
    j = 0.5 * (j + la.dagger(j))
    w, v = np.linalg.eigh(j)
    absj = (v * np.abs(w)) @ la.dagger(v)
    reduced = la.partial_trace(absj, (diff.d, diff.d), 0)
    return float(min(np.sum(np.abs(w)), la.op_norm(reduced)))


def diamond_distance(
    q1: ChannelRep,
    q2: ChannelRep,
    restarts: int = 32,
    tol: float = 1e-8,
    rng: np.random.Generator | None = None,
    max_iter: int = 100,
) -> DiamondEstimate:
    """Bracket ||q1 - q2||_diamond.

    For two unitary channels the closed form is returned.  Otherwise the lower
    bound comes from ascent over pure witness states on evolved (x) reference:
    alternately set S = sign(X(psi)) and psi = top eigenvector of the adjoint
    applied to S.  Each half-step cannot decrease ||X(psi)||_1, so the value
    climbs monotonically to a local maximum.  The first start is the maximally
    entangled state; the rest are Haar random.
    """
    if q1.d != q2.d:
        raise DimensionError(f"channels act on different dimensions ({q1.d} vs {q2.d})")
    d = q1.d
    diff = q1 - q2
    if np.max(np.abs(diff.superop), initial=0.0) == 0:
        return DiamondEstimate(0.0, 0.0, np.eye(d).ravel() / math.sqrt(d))
    u, v = _unitary_of(q1), _unitary_of(q2)
    if u is not None and v is not None:
        val = unitary_diamond_distance(u, v)
        return DiamondEstimate(val, val, None)

    rng = np.random.default_rng(0) if rng is None else rng
    sup = diff.superop
    best, best_w = -1.0, None
    for r in range(max(1, restarts)):
        w0 = np.eye(d, dtype=complex) if r == 0 else la.haar_state(d * d, rng).reshape(d, d)
        val, w = _ascent(sup, w0, tol, max_iter)
        if val > best:
            best, best_w = val, w.ravel() / np.linalg.norm(w)
    upper = choi_upper_bound(diff)
    return DiamondEstimate(min(best, upper + 1e-7), max(upper, best), best_w)


# entanglement ----------------------------------------------------------------


def _cut_dims(dims, cut):
    dims = tuple(int(x) for x in dims)
    cut = (cut,) if np.isscalar(cut) else tuple(cut)
    if not cut or any(c < 0 or c >= len(dims) for c in cut) or len(set(cut)) == len(dims):
        raise DimensionError(f"invalid bipartition {cut} of systems {dims}")
    return dims, cut


def pt_trace_norm(rho: np.ndarray, dims=(2, 2), cut=(0,)) -> float:
    """||rho^{T_A}||_1 with A the subsystems listed in ``cut``."""
    dims, cut = _cut_dims(dims, cut)
    return la.trace_norm(la.partial_transpose(rho, dims, cut))


def negativity(rho: np.ndarray, dims=(2, 2), cut=(0,)) -> float:
    """(||rho^{T_A}||_1 - 1) / 2."""
    return 0.5 * (pt_trace_norm(rho, dims, cut) - 1.0)


def isotropic_state(d_a: int, x: float) -> np.ndarray:
    """x Phi+ / d_a + (1 - x) I / d_a^2 on C^{d_a} (x) C^{d_a}."""
    d = d_a * d_a
    return x * la.phi_plus(d_a) / d_a + (1 - x) * np.eye(d) / d


def isotropic_negativity(d_a: int, x: float) -> float:
    """Closed-form negativity of the isotropic state; zero below the PPT threshold."""
    sd = d_a
    if x <= 1 / (1 + sd):
        return 0.0
    return x * sd / 2 - 0.5 + (1 - x) / (2 * sd)


def spectral_gap(m: np.ndarray) -> float:
    w, _ = la.eigh(m, tol=1e-9)
    return float(w[0] - w[-1])


# lower bound machinery -------------------------------------------------------


@dataclass(frozen=True)
class FeasiblePoint:
    a: np.ndarray = field(repr=False)
    map: HPMap = field(repr=False)

    @property
    def gap(self) -> float:
        return spectral_gap(apply_map(self.map, self.a))


@dataclass(frozen=True)
class Violation:
    condition: str
    value: float

    def __bool__(self):
        return False


def _pos_neg(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(a)
    pos = (v * np.clip(w, 0, None)) @ la.dagger(v)
    neg = (v * np.clip(-w, 0, None)) @ la.dagger(v)
    return pos, neg


def feasibility_check(a: np.ndarray, n: HPMap) -> FeasiblePoint | Violation:
    """Check membership of ``a`` in the feasible region of the lower bound.

    Conditions: Hermitian, traceless, unit trace norm, and the images of the
    positive and negative parts commute.  Returns the first failed condition.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (n.d_in, n.d_in):
        return Violation("dimension", float(a.shape[0]))
    dev = float(np.max(np.abs(a - la.dagger(a))))
    if dev > 1e-9:
        return Violation("hermitian", dev)
    a = 0.5 * (a + la.dagger(a))
    tr = abs(np.trace(a))
    if tr > 1e-9:
        return Violation("traceless", float(tr))
    tn = la.trace_norm(a)
    if abs(tn - 1) > 1e-9:
        return Violation("unit trace norm", tn)
    pos, neg = _pos_neg(a)
    comm = la.op_norm(la.commutator(apply_map(n, pos), apply_map(n, neg)))
    if comm > 1e-8:
        return Violation("commuting images", comm)
    return FeasiblePoint(a, n)


@dataclass(frozen=True)
class LowerBound:
    bound: float
    r_star: float
    best: int | None

    def __float__(self):
        return self.bound


def lower_bound(n: HPMap, candidate_points, eps: float, t: float) -> LowerBound:
    """Minimum number of input copies, (C/6) R*^2 t^2 / eps.

    R* is the largest spectral gap of N(A) over the supplied feasible points.
    Requires eps in (0, 1/6] and t >= 15 pi eps / (4 R*).
    """
    if not (0 < eps <= 1 / 6):
        raise PreconditionError(f"accuracy must lie in (0, 1/6], got {eps}")
    pts = list(candidate_points)
    if not pts:
        return LowerBound(0.0, 0.0, None)
    gaps = [spectral_gap(apply_map(n, p.a)) for p in pts]
    best = int(np.argmax(gaps))
    r = gaps[best]
    if r <= 1e-12:
        return LowerBound(0.0, 0.0, best)
    if t < 15 * math.pi * eps / (4 * r):
        raise PreconditionError(f"time {t} below the validity threshold {15 * math.pi * eps / (4 * r):.4g}")
    return LowerBound(LOWER_BOUND_C / 6 / eps * r * r * t * t, r, best)


def identity_witness(d: int = 2) -> np.ndarray:
    a = np.zeros((d, d), dtype=complex)
    a[0, 0], a[1, 1] = 0.5, -0.5
    return a


def damping_witness(n: int) -> np.ndarray:
    """A_n = 1/2 |1..1><1..1| - 1/2 |0..0><0..0| on n qubits."""
    a = np.zeros((2**n, 2**n), dtype=complex)
    a[-1, -1], a[0, 0] = 0.5, -0.5
    return a


def damping_flip_witness(n: int) -> np.ndarray:
    """1/2 |1..1><1..1| - 1/2 |01..1><01..1|.

    Also feasible for the n-fold inverse damping map; its image has spectral
    gap exactly (1/(1-gamma))**n, larger than that of A_n for n >= 2.
    """
    a = np.zeros((2**n, 2**n), dtype=complex)
    a[-1, -1] = 0.5
    k = 2 ** (n - 1) - 1
    a[k, k] = -0.5
    return a


def _bloch(m: np.ndarray) -> np.ndarray:
    paulis = _paulis()
    return np.array([np.trace(p @ m).real for p in paulis])


def _paulis():
    return (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )


def _from_bloch(r: np.ndarray) -> np.ndarray:
    x, y, z = _paulis()
    return 0.5 * (np.eye(2) + r[0] * x + r[1] * y + r[2] * z)


def qubit_noise_witness(channel: HPMap, n: int) -> np.ndarray:
    """Witness 1/2 phi+^{(x)n} - 1/2 phi-^{(x)n} for the n-fold inverse of a qubit channel.

    ``channel`` is the (invertible) noise itself.  With its Bloch affine form
    r -> T r + c, unital noise uses the Bloch direction stretched most by the
    inverse; non-unital noise uses the pure states at -c/|c| and c/|c|.
    """
    if (channel.d_in, channel.d_out) != (2, 2):
        raise DimensionError("witness builder handles single-qubit channels only")
    c = _bloch(apply_map(channel, np.eye(2) / 2))
    cols = [_bloch(apply_map(channel, _from_bloch(e))) - c for e in np.eye(3)]
    tmat = np.array(cols).T
    if np.linalg.norm(c) > 1e-12:
        u = -c / np.linalg.norm(c)
    else:
        _, _, vh = np.linalg.svd(np.linalg.inv(tmat))
        u = vh[0].real
    plus, minus = _from_bloch(u), _from_bloch(-u)
    return 0.5 * la.kron(*[plus] * n) - 0.5 * la.kron(*[minus] * n)


# discrimination --------------------------------------------------------------


def helstrom_success(rho0: np.ndarray, rho1: np.ndarray) -> float:
    return 0.5 + 0.25 * trace_distance(rho0, rho1)


def _commuting_copies_distance(p: np.ndarray, q: np.ndarray, k: int) -> float:
    """Exact ||diag(p)^{(x)k} - diag(q)^{(x)k}||_1 via multinomial classes of equal ratio."""
    classes: list[list[float]] = []
    for pi, qi in zip(p, q):
        if pi <= 0 and qi <= 0:
            continue
        for cl in classes:
            # same ratio p/q as the class representative (cross-multiplied)
            if abs(pi * cl[3] - qi * cl[2]) <= 1e-12 * max(1.0, pi + qi):
                cl[0] += pi
                cl[1] += qi
                break
        else:
            classes.append([pi, qi, pi, qi])
    pc = np.array([c[0] for c in classes])
    qc = np.array([c[1] for c in classes])
    m = len(classes)
    if m <= 1:
        return 0.0
    with np.errstate(divide="ignore"):
        lp, lq = np.log(pc), np.log(qc)
    total = 0.0
    for counts in _compositions(k, m):
        cnt = np.array(counts)
        lm = gammaln(k + 1) - np.sum(gammaln(cnt + 1))
        a = _safe_logsum(cnt, lp)
        b = _safe_logsum(cnt, lq)
        total += abs(math.exp(lm + a) - math.exp(lm + b))
    return total


def _safe_logsum(cnt, logs):
    s = 0.0
    for c, l in zip(cnt, logs):
        if c:
            if l == -np.inf:
                return -np.inf
            s += c * l
    return s


def _compositions(k: int, m: int):
    if m == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, m - 1):
            yield (first,) + rest


def copies_success(rho0: np.ndarray, rho1: np.ndarray, k: int) -> float:
    """Optimal success probability for telling k copies of rho0 from rho1.

    Exact when the two states commute (shared eigenbasis), otherwise the
    fidelity envelope 1/2 + 1/2 sqrt(1 - F^k).
    """
    if k < 1:
        raise PreconditionError("need at least one copy")
    rho0, rho1 = np.asarray(rho0), np.asarray(rho1)
    if la.op_norm(la.commutator(rho0, rho1)) <= 1e-10:
        # a generic combination of commuting matrices has their common eigenbasis
        _, v = np.linalg.eigh(rho0 + math.pi * rho1)
        p = np.clip(np.real(np.diag(la.dagger(v) @ rho0 @ v)), 0, None)
        q = np.clip(np.real(np.diag(la.dagger(v) @ rho1 @ v)), 0, None)
        m = _n_ratio_classes(p, q)
        if math.comb(k + m - 1, max(m - 1, 0)) <= 2_000_000:
            return 0.5 + 0.25 * _commuting_copies_distance(p, q, k)
    f = la.fidelity(rho0, rho1)
    return 0.5 + 0.5 * math.sqrt(max(0.0, 1.0 - f**k))


def _n_ratio_classes(p, q) -> int:
    seen = []
    for pi, qi in zip(p, q):
        if pi <= 0 and qi <= 0:
            continue
        if not any(abs(pi * b - qi * a) <= 1e-12 * max(1.0, pi + qi) for a, b in seen):
            seen.append((pi, qi))
    return len(seen)


def fidelity_envelope(rho0: np.ndarray, rho1: np.ndarray, k: int) -> float:
    """Upper bound 2 sqrt(1 - F^k) on ||rho0^{(x)k} - rho1^{(x)k}||_1."""
    f = la.fidelity(rho0, rho1)
    return 2.0 * math.sqrt(max(0.0, 1.0 - f**k))


"""Exact density-matrix simulation of the sequential exponentiation circuit.

One step feeds a fresh copy of ``rho`` and the running state ``sigma`` through
``exp(-i H dt)`` and discards the copy::

    Q_dt(sigma) = Tr_1[ exp(-i H dt) (rho (x) sigma) exp(i H dt) ]

The effective channel after K steps is the K-th power of the step
superoperator, computed by repeated squaring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import DimensionError, PreconditionError, ScheduleError
from .maps import Hamiltonian, HPMap, apply_map, superop_to_choi

VALIDITY_WINDOW = 0.8
ROBUST_WINDOW = 0.5


@dataclass(frozen=True)
class ChannelRep:
    """Linear map on d x d matrices as a column-stacked superoperator."""

    d: int
    superop: np.ndarray = field(repr=False)

    def __call__(self, sigma: np.ndarray) -> np.ndarray:
        sigma = np.asarray(sigma)
        if sigma.shape != (self.d, self.d):
            raise DimensionError(f"channel acts on {self.d}x{self.d} matrices, got {sigma.shape}")
        out = self.superop @ sigma.reshape(-1, order="F")
        return out.reshape(self.d, self.d, order="F")

    def choi(self) -> np.ndarray:
        return superop_to_choi(self.superop, self.d, self.d)

    def then(self, other: "ChannelRep") -> "ChannelRep":
        """Channel applying ``self`` first and ``other`` second."""
        return ChannelRep(self.d, other.superop @ self.superop)

    def power(self, k: int) -> "ChannelRep":
        return ChannelRep(self.d, np.linalg.matrix_power(self.superop, k))

    def __sub__(self, other: "ChannelRep") -> "ChannelRep":
        return ChannelRep(self.d, self.superop - other.superop)

    def trace_error(self) -> float:
        """Largest deviation of Tr_out of the Choi matrix from the identity."""
        c = self.choi().reshape(self.d, self.d, self.d, self.d)
        return float(np.max(np.abs(np.einsum("iaja->ij", c) - np.eye(self.d))))

    def min_choi_eig(self) -> float:
        c = self.choi()
        return float(np.linalg.eigvalsh(0.5 * (c + la.dagger(c)))[0])


def identity_channel(d: int) -> ChannelRep:
    return ChannelRep(d, np.eye(d * d, dtype=complex))


def unitary_channel(u: np.ndarray) -> ChannelRep:
    u = np.asarray(u, dtype=complex)
    return ChannelRep(u.shape[0], np.kron(u.conj(), u))


@dataclass(frozen=True)
class HMESchedule:
    h: Hamiltonian
    t: float
    K: int
    eps_target: float = float("nan")

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ScheduleError(f"step count must be a positive integer, got {self.K}")
        if self.t < 0:
            raise ScheduleError(f"total time must be non-negative, got {self.t}")
        if self.dt * self.h.op_norm > VALIDITY_WINDOW * (1 + 1e-12):
            raise ScheduleError(
                f"dt*||H|| = {self.dt * self.h.op_norm:.4g} exceeds {VALIDITY_WINDOW}; "
                f"need K >= {math.ceil(self.t * self.h.op_norm / VALIDITY_WINDOW)}"
            )

    @property
    def dt(self) -> float:
        return self.t / self.K


def schedule_for(h: Hamiltonian, t: float, eps: float) -> HMESchedule:
    """Step count sufficient for diamond accuracy ``eps`` at time ``t``.

    K = max(ceil(8 ||H||^2 t^2 / eps), ceil(1.25 ||H|| t)), and at least 1.
    """
    if eps <= 0:
        raise ScheduleError(f"target accuracy must be positive, got {eps}")
    if t < 0:
        raise ScheduleError(f"total time must be non-negative, got {t}")
    nrm = h.op_norm
    k = max(math.ceil(8.0 * nrm**2 * t**2 / eps), math.ceil(1.25 * nrm * t), 1)
    return HMESchedule(h, float(t), int(k), float(eps))


def _check_dims(rho: np.ndarray, h: Hamiltonian):
    rho = np.asarray(rho)
    if rho.shape != (h.d_in, h.d_in):
        raise DimensionError(f"Hamiltonian expects {h.d_in}-dim input copies, got {rho.shape}")
    return rho


def _step_unitary(h: Hamiltonian, dt: float) -> np.ndarray:
    return la.herm_exp(h.mat, dt).reshape(h.d_in, h.d_out, h.d_in, h.d_out)


def _step_superop(u4: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # S[(a + d c), (b + d e)] = sum_{i,j,k} U[ia, jb] rho[j, k] conj(U[ic, ke])
    m = np.einsum("iajb,jk->iakb", u4, rho)
    x = np.einsum("iakb,icke->acbe", m, u4.conj(), optimize=True)
    d = u4.shape[1]
    return x.transpose(1, 0, 3, 2).reshape(d * d, d * d)


def hme_step(rho: np.ndarray, sigma: np.ndarray, h: Hamiltonian, dt: float) -> np.ndarray:
    """One step Tr_1[exp(-iH dt)(rho (x) sigma)exp(iH dt)]."""
    rho = _check_dims(rho, h)
    sigma = np.asarray(sigma)
    if sigma.shape != (h.d_out, h.d_out):
        raise DimensionError(f"evolved state must be {h.d_out}x{h.d_out}, got {sigma.shape}")
    if dt == 0:
        return sigma.copy()
    u = la.herm_exp(h.mat, dt)
    big = u @ np.kron(rho, sigma) @ la.dagger(u)
    return la.partial_trace(big, (h.d_in, h.d_out), 1)


def step_channel(rho: np.ndarray, h: Hamiltonian, dt: float) -> ChannelRep:
    rho = _check_dims(rho, h)
    return ChannelRep(h.d_out, _step_superop(_step_unitary(h, dt), rho))


def hme_channel(rho: np.ndarray, sched: HMESchedule) -> ChannelRep:
    """Effective channel Q_t after sched.K identical steps."""
    return step_channel(rho, sched.h, sched.dt).power(sched.K)


def ideal_channel(n: HPMap, rho: np.ndarray, t: float) -> ChannelRep:
    """Unitary channel of exp(-i N(rho) t)."""
    return unitary_channel(la.herm_exp(apply_map(n, rho), t))


def controlled_unitary(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = u
    return out


def ideal_controlled_channel(n: HPMap, rho: np.ndarray, t: float) -> ChannelRep:
    """Controlled version |0><0| (x) I + |1><1| (x) exp(-i N(rho) t)."""
    return unitary_channel(controlled_unitary(la.herm_exp(apply_map(n, rho), t)))


def _assemble_controlled(d: int, blocks: dict) -> np.ndarray:
    # blocks[(c, c')] is the d^2 x d^2 superop acting on the (c, c') block
    big = np.zeros((2, d, 2, d, 2, d, 2, d), dtype=complex)
    for (c, cp), b in blocks.items():
        big[cp, :, c, :, cp, :, c, :] = b.reshape(d, d, d, d)
    n = 4 * d * d
    return big.reshape(n, n)


def controlled_hme_channel(rho: np.ndarray, sched: HMESchedule, base: Hamiltonian) -> ChannelRep:
    """Channel of K steps of the controlled Hamiltonian |1><1|_c (x) base.

    ``sched.h`` must be ``controlled_extension(base)``.  The controlled step
    splits into four blocks of the control qubit: the |0><0| block is left
    alone, the |1><1| block undergoes the plain step, and the coherences pick
    up A = Tr_1[U (rho (x) I)] from one side.  Powering the blocks separately
    is exact and far cheaper than powering the full superoperator.
    """
    rho = _check_dims(rho, base)
    h = sched.h
    if (h.d_in, h.d_out) != (base.d_in, 2 * base.d_out) or not np.allclose(
        h.mat[:, :], _controlled_mat(base), atol=1e-12
    ):
        raise DimensionError("schedule Hamiltonian is not the controlled extension of base")
    d = base.d_out
    u4 = _step_unitary(base, sched.dt)
    s11 = np.linalg.matrix_power(_step_superop(u4, rho), sched.K)
    a = np.einsum("iajb,ji->ab", u4, rho)
    ak = np.linalg.matrix_power(a, sched.K)
    eye = np.eye(d)
    blocks = {
        (0, 0): np.eye(d * d, dtype=complex),
        (1, 1): s11,
        (1, 0): np.kron(eye, ak),  # X -> A^K X
        (0, 1): np.kron(ak.conj(), eye),  # X -> X (A^K)^dagger
    }
    return ChannelRep(2 * d, _assemble_controlled(d, blocks))


def _controlled_mat(base: Hamiltonian) -> np.ndarray:
    big = np.kron(np.diag([0.0, 1.0]), base.mat)
    return la.permute_systems(big, (2, base.d_in, base.d_out), (1, 0, 2))


@dataclass(frozen=True)
class NoiseProfile:
    """Per-step input copies and Hamiltonians for a noisy run."""

    rhos: tuple
    hams: tuple

    def __post_init__(self):
        object.__setattr__(self, "rhos", tuple(np.asarray(r) for r in self.rhos))
        object.__setattr__(self, "hams", tuple(self.hams))
        if len(self.rhos) != len(self.hams) or not self.rhos:
            raise PreconditionError("noise profile needs equal, non-zero numbers of states and Hamiltonians")

    @property
    def K(self) -> int:
        return len(self.rhos)

    @classmethod
    def uniform(cls, rho: np.ndarray, h: Hamiltonian, K: int) -> "NoiseProfile":
        return cls((rho,) * K, (h,) * K)


def noisy_hme_channel(profile: NoiseProfile, dt: float, reference: Hamiltonian | None = None) -> ChannelRep:
    """Compose K distinct steps in order k = 1..K.

    Requires dt ||H'_k|| <= 1/2 for every step (equivalently K >= 2t||H'_k||),
    and the same for ``reference`` when given.
    """
    norms = [h.op_norm for h in profile.hams]
    if reference is not None:
        norms.append(reference.op_norm)
    worst = max(norms) * dt
    if worst > ROBUST_WINDOW * (1 + 1e-12):
        raise PreconditionError(f"dt*||H|| = {worst:.4g} exceeds {ROBUST_WINDOW}; increase K")
    d = profile.hams[0].d_out
    total = np.eye(d * d, dtype=complex)
    cache: dict[int, np.ndarray] = {}
    for rho, h in zip(profile.rhos, profile.hams):
        key = id(h)
        if key not in cache:
            cache[key] = _step_unitary(h, dt)
        total = _step_superop(cache[key], _check_dims(rho, h)) @ total
    return ChannelRep(d, total)

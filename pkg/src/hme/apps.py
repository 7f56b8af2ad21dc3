"""Application pipelines built on the exponentiation engine.

Two knobs recur:

``channel`` selects ``"hme"`` (the simulated sequential circuit at the
scheduled step count) or ``"ideal"`` (the exact controlled unitary).

``mode`` selects ``"exact"`` (report probabilities and expectation values
straight from the simulated density matrix) or ``"sampled"`` (draw
measurement outcomes from those probabilities with the given RNG).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from . import maps as mp
from .engine import (
    controlled_hme_channel,
    controlled_unitary,
    hme_channel,
    schedule_for,
)
from .errors import DimensionError, ParameterError, PreconditionError

MODES = ("exact", "sampled")
CHANNELS = ("hme", "ideal")
NEGATIVITY_CM = 2.0

PLUS = np.full((2, 2), 0.5, dtype=complex)
MINUS_KET = np.array([1.0, -1.0]) / math.sqrt(2)


def _check_mode(mode: str, channel: str | None = None):
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if channel is not None and channel not in CHANNELS:
        raise ParameterError(f"channel must be one of {CHANNELS}, got {channel!r}")


def result_record(op: str, params: dict, estimate, exact, copies, seed) -> dict:
    """JSON-ready record of one application run."""
    return {"op": op, "params": params, "estimate": estimate, "exact": exact, "copies": copies, "seed": seed}


def _ancilla_block(sigma_out: np.ndarray, vec: np.ndarray, d: int) -> np.ndarray:
    """(<v| (x) I) Sigma (|v> (x) I) for an ancilla vector v."""
    blocks = sigma_out.reshape(2, d, 2, d)
    return np.einsum("c,cadb,d->ab", vec.conj(), blocks, vec)


def _controlled_run(n: mp.HPMap, rho: np.ndarray, sigma: np.ndarray, t: float, eps: float, channel: str):
    """Evolve |+><+| (x) sigma under controlled exp(-i N(rho) t). Returns (state, K)."""
    start = np.kron(PLUS, sigma)
    if channel == "ideal":
        u = la.herm_exp(mp.apply_map(n, rho), t)
        cu = controlled_unitary(u)
        return cu @ start @ la.dagger(cu), 0
    base = mp.hamiltonian_of(n)
    sched = schedule_for(mp.controlled_extension(base), t, eps)
    q = controlled_hme_channel(rho, sched, base)
    return q(start), sched.K


# entanglement detection ------------------------------------------------------


@dataclass(frozen=True)
class DetectionResult:
    p_one: float
    decision: str
    copies_used: int
    outcome: int | None = None

    @property
    def entangled(self) -> bool:
        return self.decision == "entangled"


def detect_entanglement(
    rho: np.ndarray,
    dims=(2, 2),
    eps_channel: float = 1 / 12,
    rng: np.random.Generator | None = None,
    mode: str = "exact",
    channel: str = "hme",
) -> DetectionResult:
    """One-shot pure-state entanglement test with the partial reduction map.

    The state itself is the evolved register, controlled by an ancilla in
    |+>, under exp(-i rho^{R_A} pi).  Product pure states return the ancilla
    to |+>; a typical entangled state flips it towards |->.
    """
    _check_mode(mode, channel)
    d_a, d_b = (int(x) for x in dims)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(f"state is {rho.shape}, cut expects {d_a * d_b} dimensions")
    n = mp.partial_reduction(d_a, d_b)
    out, k = _controlled_run(n, rho, rho, math.pi, eps_channel, channel)
    d = d_a * d_b
    p_one = float(np.clip(np.real(np.trace(_ancilla_block(out, MINUS_KET, d))), 0.0, 1.0))
    outcome = None
    if mode == "sampled":
        rng = np.random.default_rng() if rng is None else rng
        outcome = int(rng.random() < p_one)
        entangled = outcome == 1
    else:
        entangled = p_one > 0.5
    return DetectionResult(p_one, "entangled" if entangled else "product", k + 1, outcome)


# negativity ------------------------------------------------------------------


def trace_cos(
    rho: np.ndarray,
    dims=(2, 2),
    t: float = 1.0,
    eps_channel: float = 1e-3,
    channel: str = "hme",
) -> float:
    """<X> on an ancilla controlling exp(-i rho^{T_A} t) on the maximally mixed state.

    Equals (1/d) Tr cos(t rho^{T_A}) up to the channel error.
    """
    _check_mode("exact", channel)
    return _trace_cos_run(rho, dims, t, eps_channel, channel)[0]


def _trace_cos_run(rho, dims, t, eps_channel, channel):
    d_a, d_b = (int(x) for x in dims)
    d = d_a * d_b
    if t == 0:
        return 1.0, 0
    n = mp.partial_transpose_map(d_a, d_b)
    out, k = _controlled_run(n, np.asarray(rho, dtype=complex), np.eye(d) / d, t, eps_channel, channel)
    x = 2.0 * np.real(np.trace(out.reshape(2, d, 2, d)[1, :, 0, :]))
    return float(x), k


def truncation_count(d: int, eps: float) -> int:
    return math.ceil(3 * d / (2 * math.pi * eps) + 0.5)


def l_probabilities(L: int) -> np.ndarray:
    """p(l) = 8 / (pi^2 (2l-1)^2) for l = 1..L."""
    odd = 2 * np.arange(1, L + 1) - 1
    return 8.0 / (math.pi**2 * odd**2)


def fourier_pt_trace_norm(rho: np.ndarray, dims, L: int) -> float:
    """Truncated series (pi/2) d - sum_{l<=L} 4/(pi (2l-1)^2) Tr cos((2l-1) rho^{T_A})."""
    d = int(np.prod(dims))
    w = np.linalg.eigvalsh(la.partial_transpose(rho, dims, 0))
    odd = 2 * np.arange(1, L + 1) - 1
    terms = 4.0 / (math.pi * odd**2) * np.cos(np.outer(odd, w)).sum(axis=1)
    return float(math.pi / 2 * d - terms.sum())


def truncation_bound(d: int, L: int) -> float:
    return 2 * d / ((2 * L - 1) * math.pi)


def group_count(n: int, delta: float) -> int:
    return max(1, min(math.ceil(8 * math.log(2 / delta)), n))


def median_of_means(samples, delta: float = 0.1, groups: int | None = None) -> float:
    """Median of the means of contiguous groups.

    The number of groups defaults to min(ceil(8 ln(2/delta)), len(samples)).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("median of means needs at least one sample")
    g = group_count(x.size, delta) if groups is None else max(1, min(int(groups), x.size))
    return float(np.median([chunk.mean() for chunk in np.array_split(x, g)]))


@dataclass(frozen=True)
class NegativityPlan:
    eps: float
    delta: float
    L: int
    M: int
    group_count: int
    accuracies: tuple = field(repr=False)
    mode: str = "sampled"

    @property
    def probabilities(self) -> np.ndarray:
        return l_probabilities(self.L)


def negativity_plan(d: int, d_a: int, eps: float, delta: float, M: int | None = None, mode: str = "sampled"):
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ParameterError("eps and delta must lie in (0, 1)")
    L = truncation_count(d, eps)
    if M is None:
        M = math.ceil(NEGATIVITY_CM * math.log(1 / delta) * d * d_a / eps**2)
    odd = 2 * np.arange(1, L + 1) - 1
    acc = math.pi * odd * eps / (3 * d * (2 + math.log(2 * L - 1)))
    return NegativityPlan(eps, delta, L, int(M), group_count(int(M), delta), tuple(acc), mode)


@dataclass(frozen=True)
class NegativityEstimate:
    estimate: float
    plan: NegativityPlan
    copies_total: float
    iterations: int


def estimate_negativity(
    rho: np.ndarray,
    dims=(2, 2),
    eps: float = 0.1,
    delta: float = 0.1,
    rng: np.random.Generator | None = None,
    mode: str = "sampled",
    channel: str = "hme",
    M: int | None = None,
) -> NegativityEstimate:
    """Randomised Fourier estimator of the negativity.

    Each iteration draws l with probability p(l).  For l > L the sample is 0;
    otherwise the ancilla of the circuit behind :func:`trace_cos` at time
    2l-1 is measured and the sample is -(pi/2) d on |+> and +(pi/2) d on |->.
    The result is ((pi/2) d + median_of_means(samples) - 1) / 2.

    In exact mode the expected value of a sample replaces the median of means,
    which removes shot noise but keeps truncation and channel error.
    """
    _check_mode(mode, channel)
    d_a, d_b = (int(x) for x in dims)
    d = d_a * d_b
    plan = negativity_plan(d, d_a, eps, delta, M, mode)
    probs = plan.probabilities
    xs, ks = [], []
    for l, acc in enumerate(plan.accuracies, start=1):
        x, k = _trace_cos_run(rho, dims, 2 * l - 1, acc, channel)
        xs.append(x)
        ks.append(k)
    xs, ks = np.array(xs), np.array(ks)
    # probability of reading |-> on the ancilla
    p_minus = np.clip((1 - xs) / 2, 0.0, 1.0)
    scale = math.pi / 2 * d
    if mode == "exact":
        mean = float(np.sum(probs * scale * (2 * p_minus - 1)))
        copies = float(plan.M * np.sum(probs * ks))
        return NegativityEstimate(0.5 * (scale + mean - 1), plan, copies, plan.M)
    rng = np.random.default_rng() if rng is None else rng
    cdf = np.cumsum(probs)
    u = rng.random(plan.M)
    idx = np.searchsorted(cdf, u, side="right")  # idx == L means l > L
    inside = idx < plan.L
    samples = np.zeros(plan.M)
    li = idx[inside]
    minus = rng.random(li.size) < p_minus[li]
    samples[inside] = np.where(minus, scale, -scale)
    copies = float(np.sum(ks[li]))
    est = 0.5 * (scale + median_of_means(samples, delta, plan.group_count) - 1)
    return NegativityEstimate(est, plan, copies, plan.M)


# noiseless state recovery ----------------------------------------------------


@dataclass(frozen=True)
class RecoveryResult:
    recovered: np.ndarray = field(repr=False)
    success_prob: float
    trace_dist_to_target: float | None
    copies_used: int
    attempts: int = 1
    succeeded: bool = True
    empirical_rate: float | None = None


def recover_state(
    noise: mp.HPMap,
    noisy_rho: np.ndarray,
    guide_sigma: np.ndarray,
    eps: float = 0.05,
    delta: float = 0.1,
    rng: np.random.Generator | None = None,
    mode: str = "exact",
    channel: str = "hme",
    target: np.ndarray | None = None,
    trials: int | None = None,
) -> RecoveryResult:
    """Project a noisy pure state back onto its noiseless version.

    Runs the controlled exponentiation of the inverse noise at t = pi with the
    guide state on the evolved register and post-selects the ancilla on |->,
    which is reported as outcome 1.  The inner accuracy is F eps / 3 with
    F = Tr(sigma N^{-1}(rho)), the overlap of the guide with the target.

    In sampled mode up to m = ceil(log(1/delta) / log(1/(1-F'))) attempts are
    made, stopping at the first success.  Passing ``trials`` additionally
    draws that many independent outcomes and reports their success rate.
    """
    _check_mode(mode, channel)
    inverse = mp.invert_map(noise)
    d = noise.d_in
    sigma = la.as_density(guide_sigma, tol=1e-9)
    f = float(np.real(np.trace(sigma @ mp.apply_map(inverse, np.asarray(noisy_rho)))))
    if f <= 1e-12 and channel == "hme":
        raise PreconditionError(f"guide state has no overlap with the target (F = {f:.3e}); no finite schedule exists")
    eps_inner = f * eps / 3
    out, k = _controlled_run(inverse, np.asarray(noisy_rho, dtype=complex), sigma, math.pi, eps_inner, channel)
    block = _ancilla_block(out, MINUS_KET, d)
    p = float(np.clip(np.real(np.trace(block)), 0.0, 1.0))
    if p < eps_inner:
        warnings.warn(f"post-selection probability {p:.3e} is below the inner accuracy {eps_inner:.3e}", RuntimeWarning)
    recovered = block / p if p > 1e-15 else block
    dist = None if target is None else la.trace_norm(recovered - np.asarray(target))
    attempts, ok, rate = 1, p > 1e-15, None
    if mode == "sampled":
        rng = np.random.default_rng() if rng is None else rng
        m = repetitions(p, delta) if ok else 1
        draws = rng.random(m) < p
        ok = bool(draws.any())
        attempts = int(np.argmax(draws)) + 1 if ok else m
        if trials:
            rate = float(np.mean(rng.random(int(trials)) < p))
    return RecoveryResult(recovered, p, dist, k * attempts, attempts, ok, rate)


def repetitions(p: float, delta: float) -> int:
    """Attempts needed so that all fail with probability at most delta."""
    if p >= 1:
        return 1
    if p <= 0:
        raise PreconditionError("post-selection never succeeds")
    return max(1, math.ceil(math.log(1 / delta) / math.log(1 / (1 - p))))


# expectation values ----------------------------------------------------------


def measure_expectation(
    rho: np.ndarray,
    o: np.ndarray,
    t: float = 1.0,
    eps_channel: float = 1e-3,
    channel: str = "hme",
) -> float:
    """Read Tr(O rho) from the phase an ancilla in |+> picks up under exp(-i N_O(rho) t).

    The ancilla ends in (|0> + exp(-i Tr(O rho) t)|1>)/sqrt(2), so
    <X> = cos(phi) and <Y> = -sin(phi) give phi by atan2.
    """
    _check_mode("exact", channel)
    o = la.check_hermitian(o, name="observable")
    if t <= 0 or la.op_norm(o) * t >= math.pi:
        raise PreconditionError(f"need 0 < ||O|| t < pi for an unambiguous phase (||O|| t = {la.op_norm(o) * t:.4g})")
    n = mp.observable_map(o)
    rho = np.asarray(rho, dtype=complex)
    if channel == "ideal":
        u = la.herm_exp(mp.apply_map(n, rho), t)
        out = u @ PLUS @ la.dagger(u)
    else:
        sched = schedule_for(mp.hamiltonian_of(n), t, eps_channel)
        out = hme_channel(rho, sched)(PLUS)
    ex = 2 * out[0, 1].real
    ey = -2 * out[0, 1].imag
    return math.atan2(-ey, ex) / t

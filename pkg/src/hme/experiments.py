"""Named experiments behind the command-line interface.

Every experiment takes a parameter dict (merged over its defaults), a seed
and a mode, and returns an :class:`ExperimentResult` holding CSV rows and a
JSON-ready summary.  Each row draws from its own RNG stream spawned from the
seed, so results do not depend on execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import apps
from . import engine as en
from . import linalg as la
from . import maps as mp
from . import metrics as me
from .dsl import parse_state
from .errors import ParameterError


@dataclass
class ExperimentResult:
    columns: list
    rows: list
    summary: dict
    passed: bool = True
    extra: dict = field(default_factory=dict)


def streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators for n rows, derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def _map_rows(fn, items, workers: int = 1):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def fit_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def random_hp_map(d: int, rng: np.random.Generator) -> mp.HPMap:
    """Random Hermitian-preserving map on C^d, scaled so its Hamiltonian has unit norm."""
    c = la.random_hermitian(d * d, rng)
    h = la.partial_transpose(c, (d, d), 0)
    return mp.from_choi(c / la.op_norm(h))


def _ideal_step(n: mp.HPMap, rho, sigma, dt):
    u = la.herm_exp(mp.apply_map(n, rho), dt)
    return u @ sigma @ la.dagger(u)


# 1 ---------------------------------------------------------------------------


def step_order(p, seed, mode):
    dts = np.logspace(math.log10(p["dt_min"]), math.log10(p["dt_max"]), int(p["n_dt"]))
    cases = [("random", i) for i in range(int(p["n_maps"]))]
    if p["include_pt"]:
        cases.append(("pt", 0))
    rngs = streams(seed, len(cases))

    def run(k):
        kind, i = cases[k]
        rng = rngs[k]
        if kind == "random":
            n = random_hp_map(int(p["d"]), rng)
            label = f"random-{i}"
        else:
            n = mp.partial_transpose_map(int(p["d_a"]), int(p["d_b"]))
            label = f"pt-{p['d_a']}x{p['d_b']}"
        h = mp.hamiltonian_of(n)
        rho = la.random_density(n.d_in, rng)
        sigma = la.pure(la.haar_state(n.d_out, rng))
        errs = [la.trace_norm(en.hme_step(rho, sigma, h, dt) - _ideal_step(n, rho, sigma, dt)) for dt in dts]
        return label, errs

    out = _map_rows(run, range(len(cases)), p["workers"])
    rows, slopes = [], {}
    for label, errs in out:
        slopes[label] = fit_slope(dts, errs)
        rows += [[label, dt, e] for dt, e in zip(dts, errs)]
    ok = all(abs(s - 2.0) <= p["slope_tol"] for s in slopes.values())
    return ExperimentResult(["map", "dt", "trace_error"], rows, {"slopes": slopes}, ok)


# 2 ---------------------------------------------------------------------------


def _case_map(name: str, p) -> mp.HPMap:
    if name == "swap":
        return mp.identity(int(p.get("d", 2)))
    if name == "reduction":
        return mp.partial_reduction(int(p["d_a"]), int(p["d_b"]))
    if name == "pt":
        return mp.partial_transpose_map(int(p["d_a"]), int(p["d_b"]))
    raise ParameterError(f"unknown case {name!r}")


def k_scaling(p, seed, mode):
    ks = [2**e for e in range(int(p["k_exp_min"]), int(p["k_exp_max"]) + 1)]
    if not ks:
        raise ParameterError("K sweep is empty")
    t = float(p["t"])
    rngs = streams(seed, len(p["cases"]))
    rows, summary, ok = [], {"slopes": {}, "scheduled": {}}, True
    for name, rng in zip(p["cases"], rngs):
        n = _case_map(name, p)
        h = mp.hamiltonian_of(n)
        rho = la.pure(la.haar_state(n.d_in, rng))
        ideal = en.ideal_channel(n, rho, t)

        def dist(k, rho=rho, h=h, ideal=ideal):
            q = en.hme_channel(rho, en.HMESchedule(h, t, k))
            return me.diamond_distance(q, ideal, restarts=int(p["restarts"]), rng=np.random.default_rng(k))

        ests = _map_rows(dist, ks, p["workers"])
        rows += [[name, k, e.lower, e.upper] for k, e in zip(ks, ests)]
        slope = fit_slope(ks, [e.lower for e in ests])
        sched = en.schedule_for(h, t, float(p["eps"]))
        at = dist(sched.K)
        summary["slopes"][name] = slope
        summary["scheduled"][name] = {"K": sched.K, "diamond_lower": at.lower, "diamond_upper": at.upper}
        ok &= abs(slope + 1.0) <= p["slope_tol"] and at.lower <= float(p["eps"])
    return ExperimentResult(["case", "K", "diamond_lower", "diamond_upper"], rows, summary, ok)


# 3 ---------------------------------------------------------------------------


def _probe_states(d_a: int, d_b: int, rng) -> dict:
    d = d_a * d_b
    return {
        "zero": la.pure(la.ket(0, d)),
        "product-haar": la.pure(np.kron(la.haar_state(d_a, rng), la.haar_state(d_b, rng))),
        "haar": la.pure(la.haar_state(d, rng)),
        "mixed": la.random_density(d, rng),
    }


def min_steps(n: mp.HPMap, probes: dict, t: float, eps: float, restarts: int = 1) -> tuple[int, float]:
    """Smallest K whose worst probe distance (diamond lower bound) is at most eps.

    Bisection between the validity floor and the generic schedule; the error
    decreases monotonically in K over this range.
    """
    h = mp.hamiltonian_of(n)
    ideals = {k: en.ideal_channel(n, r, t) for k, r in probes.items()}

    def worst(k):
        vals = []
        for name, r in probes.items():
            q = en.hme_channel(r, en.HMESchedule(h, t, k))
            vals.append(me.diamond_distance(q, ideals[name], restarts=restarts).lower)
        return max(vals)

    lo = max(1, math.ceil(t * h.op_norm / en.VALIDITY_WINDOW))
    hi = en.schedule_for(h, t, eps).K
    while worst(hi) > eps:
        hi *= 2
    if worst(lo) <= eps:
        return lo, worst(lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if worst(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi, worst(hi)


def pt_scaling(p, seed, mode):
    d_as = [int(x) for x in p["d_as"]]
    if not d_as:
        raise ParameterError("d_as is empty")
    d_b, t, eps = int(p["d_b"]), float(p["t"]), float(p["eps"])
    rngs = streams(seed, len(d_as))

    def run(k):
        d_a = d_as[k]
        n = mp.partial_transpose_map(d_a, d_b)
        kmin, dist = min_steps(n, _probe_states(d_a, d_b, rngs[k]), t, eps, int(p["restarts"]))
        generic = en.schedule_for(mp.hamiltonian_of(n), t, eps).K
        return [d_a, kmin, generic, dist]

    rows = _map_rows(run, range(len(d_as)), p["workers"])
    k0, a0 = rows[0][1], rows[0][0]
    growth = {str(r[0]): (r[1] / k0) / (r[0] / a0) for r in rows}
    margin = rows[-1][2] / rows[-1][1]
    ok = all(0.7 <= g <= 1.4 for g in growth.values()) and margin >= 4
    summary = {"growth_vs_linear": growth, "generic_over_measured_at_max": margin}
    return ExperimentResult(["d_a", "K_min", "K_generic", "diamond_lower"], rows, summary, ok)


# 4 ---------------------------------------------------------------------------


def noisy_profile(rho, h: mp.Hamiltonian, K: int, ds_max: float, dh_max: float, rng):
    """Random per-step perturbations with mean input error <= ds_max and Hamiltonian error <= dh_max.

    Returns the profile and the realised (D_S, D_H).
    """
    d = rho.shape[0]
    rhos, hams, ds, dh = [], [], [], []
    for _ in range(K):
        a = rng.uniform(0, ds_max / 2)
        r = (1 - a) * rho + a * la.random_density(d, rng)
        b = rng.uniform(0, dh_max)
        g = la.random_hermitian(h.mat.shape[0], rng, norm=1.0)
        hk = mp.Hamiltonian(h.mat + b * g, h.d_in, h.d_out)
        rhos.append(r)
        hams.append(hk)
        ds.append(la.trace_norm(r - rho))
        dh.append(la.op_norm(hk.mat - h.mat))
    return en.NoiseProfile(rhos, hams), float(np.mean(ds)), float(np.mean(dh))


def robustness(p, seed, mode):
    t, K, runs = float(p["t"]), int(p["K"]), int(p["n_runs"])
    cases = list(p["cases"])
    jobs = [(c, i) for c in cases for i in range(runs)]
    rngs = streams(seed, len(jobs))

    def run(k):
        case, i = jobs[k]
        rng = rngs[k]
        n = _case_map(case, p)
        h = mp.hamiltonian_of(n)
        rho = la.random_density(n.d_in, rng)
        prof, ds, dh = noisy_profile(rho, h, K, float(p["ds_max"]), float(p["dh_max"]), rng)
        q = en.hme_channel(rho, en.HMESchedule(h, t, K))
        qn = en.noisy_hme_channel(prof, t / K, reference=h)
        est = me.diamond_distance(qn, q, restarts=int(p["restarts"]), rng=rng)
        generic = 4 * t * (dh + h.op_norm * ds)
        bound = 4 * t * (dh + ds) if case == "pt" else generic
        return [case, i, ds, dh, est.lower, est.upper, bound, generic]

    rows = _map_rows(run, range(len(jobs)), p["workers"])
    worst = {c: max(r[4] / r[6] for r in rows if r[0] == c) for c in cases}
    ok = all(r[4] <= r[6] + 1e-6 for r in rows)
    cols = ["case", "run", "D_S", "D_H", "diamond_lower", "diamond_upper", "bound", "generic_bound"]
    return ExperimentResult(cols, rows, {"worst_ratio_to_bound": worst}, ok)


# 5 ---------------------------------------------------------------------------


def gauge_freedom(p, seed, mode):
    K, t = int(p["K"]), float(p["t"])
    rngs = streams(seed, int(p["n_trials"]))
    h = mp.hamiltonian_of(mp.identity(int(p["d"])))

    def run(k):
        rng = rngs[k]
        m = la.random_hermitian(h.d_in, rng, norm=1.0)
        h2 = mp.gauge_shift(h, m)
        rho = la.random_density(h.d_in, rng)
        out = [k, bool(mp.hamiltonian_freedom_check(h, h2, h.d_in, h.d_out))]
        for kk in (K, 10 * K):
            q1 = en.hme_channel(rho, en.HMESchedule(h, t, kk))
            q2 = en.hme_channel(rho, en.HMESchedule(h2, t, kk))
            out.append(la.frobenius_norm(q1.superop - q2.superop))
        return out

    rows = _map_rows(run, range(int(p["n_trials"])), p["workers"])
    worst = max(r[2] for r in rows)
    decay = float(np.mean([r[2] / r[3] for r in rows]))
    summary = {"max_frobenius": worst, "mean_decay_factor_10x_K": decay, "tolerance": p["tol"]}
    ok = worst < float(p["tol"])
    return ExperimentResult(["trial", "same_family", "frobenius_K", "frobenius_10K"], rows, summary, ok)


# 6 ---------------------------------------------------------------------------


def detect(p, seed, mode):
    n_draws, d_a, d_b = int(p["n_draws"]), int(p["d_a"]), int(p["d_b"])
    rngs = streams(seed, n_draws)

    def run(k):
        rng = rngs[k]
        kind = "product" if k < n_draws // 2 else "global"
        if kind == "product":
            psi = np.kron(la.haar_state(d_a, rng), la.haar_state(d_b, rng))
        else:
            psi = la.haar_state(d_a * d_b, rng)
        rho = la.pure(psi)
        res = apps.detect_entanglement(rho, (d_a, d_b), float(p["eps_channel"]), rng, mode)
        ideal = apps.detect_entanglement(rho, (d_a, d_b), mode="exact", channel="ideal")
        correct = res.entangled == (kind == "global")
        return [k, kind, res.p_one, ideal.p_one, -1 if res.outcome is None else res.outcome, int(correct), res.copies_used]

    rows = _map_rows(run, range(n_draws), p["workers"])
    rate = float(np.mean([r[5] for r in rows]))
    dev = max((abs((1 - r[3]) - 1) for r in rows if r[1] == "product"), default=0.0)
    summary = {
        "success_rate": rate,
        "mean_p_one_product": float(np.mean([r[2] for r in rows if r[1] == "product"])),
        "mean_p_one_global": float(np.mean([r[2] for r in rows if r[1] == "global"])),
        "max_ideal_product_p0_deviation": dev,
    }
    ok = rate >= 2 / 3 and dev <= 1e-9
    cols = ["draw", "kind", "p_one", "p_one_ideal", "outcome", "correct", "copies"]
    return ExperimentResult(cols, rows, summary, ok)


# 7 ---------------------------------------------------------------------------


def truncation_check(n_states: int, d_a: int, d_b: int, eps: float, rng) -> list:
    """Truncated Fourier series of ||rho^{T_A}||_1 against the exact value on random states."""
    d = d_a * d_b
    L = apps.truncation_count(d, eps)
    bound = apps.truncation_bound(d, L)
    out = []
    for i in range(n_states):
        rho = la.random_density(d, rng) if i % 2 else la.pure(la.haar_state(d, rng))
        exact = me.pt_trace_norm(rho, (d_a, d_b))
        approx = apps.fourier_pt_trace_norm(rho, (d_a, d_b), L)
        out.append({"error": abs(approx - exact), "bound": bound})
    return out


def negativity(p, seed, mode):
    states = list(p["states"])
    reps = int(p["reps"])
    jobs = [(s, r) for s in states for r in range(reps)]
    rngs = streams(seed, len(jobs) + 1)
    parsed = {s: parse_state(s) for s in states}

    def run(k):
        s, r = jobs[k]
        rho, dims = parsed[s]
        est = apps.estimate_negativity(
            rho, dims, float(p["eps"]), float(p["delta"]), rngs[k], mode, M=p["M"]
        )
        exact = me.negativity(rho, dims)
        return [s, r, est.estimate, exact, abs(est.estimate - exact), est.copies_total]

    rows = _map_rows(run, range(len(jobs)), p["workers"])
    freq = {s: float(np.mean([r[4] <= p["tol"] for r in rows if r[0] == s])) for s in states}
    trunc = truncation_check(int(p["n_truncation"]), 2, 2, float(p["eps"]), rngs[-1])
    ratio = max(t["error"] / t["bound"] for t in trunc)
    ok = all(f >= 1 - float(p["delta"]) for f in freq.values()) and ratio <= 1.0
    summary = {"success_frequency": freq, "truncation_max_error_over_bound": ratio}
    cols = ["state", "rep", "estimate", "exact", "abs_error", "copies"]
    return ExperimentResult(cols, rows, summary, ok, {"truncation": trunc})


# 8 ---------------------------------------------------------------------------


def recover(p, seed, mode):
    gamma = float(p["gamma"])
    psi = la.pure(np.array(p["psi"], dtype=complex))
    noise = mp.amplitude_damping(gamma)
    noisy = mp.apply_map(noise, psi)
    sigma = noisy if p["guide"] == "noisy" else parse_state(p["guide"])[0]
    f_exact = float(np.real(np.trace(sigma @ psi)))
    rows = []
    for channel, rng in zip(("hme", "ideal"), streams(seed, 2)):
        res = apps.recover_state(
            noise, noisy, sigma, float(p["eps"]), float(p["delta"]), rng, mode, channel, psi, int(p["trials"])
        )
        rate = res.empirical_rate if res.empirical_rate is not None else float("nan")
        rows.append([channel, f_exact, res.success_prob, rate, res.trace_dist_to_target, res.copies_used])
    hme, ideal = rows
    ok = hme[4] <= float(p["eps"]) and abs(ideal[4]) < 1e-9 and abs(ideal[2] - f_exact) <= 1e-9
    if mode == "sampled":
        ok &= abs(hme[3] - hme[2]) <= 0.02
    summary = {"F": f_exact, "hme_success_prob": hme[2], "hme_trace_distance": hme[4], "ideal_trace_distance": ideal[4]}
    cols = ["channel", "F", "success_prob", "empirical_rate", "trace_distance", "copies"]
    return ExperimentResult(cols, rows, summary, ok)


# 9 ---------------------------------------------------------------------------


def lower_bound(p, seed, mode):
    gamma, eps, t = float(p["gamma"]), float(p["eps"]), float(p["t"])
    rows = []
    ident = mp.identity(2)
    pt = me.feasibility_check(me.identity_witness(2), ident)
    lb = me.lower_bound(ident, [pt] if pt else [], eps, t)
    rows.append(["identity", 1, "identity", bool(pt), lb.r_star, lb.bound, 8 / eps * t * t])
    r_star, r_an = {}, {}
    inv = mp.amplitude_damping_inverse(gamma)
    for n in [int(x) for x in p["ns"]]:
        nmap = inv
        for _ in range(n - 1):
            nmap = mp.tensor_maps(nmap, inv)
        h_norm = mp.hamiltonian_of(nmap).op_norm
        upper = 8 / eps * h_norm**2 * t * t
        feas = []
        for label, a in (("A_n", me.damping_witness(n)), ("flip", me.damping_flip_witness(n))):
            fp = me.feasibility_check(a, nmap)
            gap = me.spectral_gap(mp.apply_map(nmap, a))
            bound = me.lower_bound(nmap, [fp], eps, t).bound if fp else float("nan")
            rows.append(["damping_inverse", n, label, bool(fp), gap, bound, upper])
            if fp:
                feas.append(fp)
            if label == "A_n":
                r_an[n] = gap
        r_star[n] = me.lower_bound(nmap, feas, eps, t).r_star
    ns = sorted(r_star)
    ratios = [r_star[b] / r_star[a] for a, b in zip(ns, ns[1:])]
    ratios_an = [r_an[b] / r_an[a] for a, b in zip(ns, ns[1:])]
    upper_over_lower = {str(n): 48 / me.LOWER_BOUND_C * (mp.hamiltonian_of(_power(inv, n)).op_norm / r_star[n]) ** 2 for n in ns}
    ok = bool(pt) and abs(lb.r_star - 1) < 1e-12 and all(r[3] for r in rows) and all(x >= 1 / (1 - gamma) - 1e-9 for x in ratios)
    summary = {
        "r_star": {str(n): r_star[n] for n in ns},
        "r_star_ratios": ratios,
        "r_A_n_only_ratios": ratios_an,
        "upper_over_lower": upper_over_lower,
        "constant_ratio_cap": 48 / me.LOWER_BOUND_C,
    }
    cols = ["map", "n", "witness", "feasible", "spectral_gap", "lower_bound", "upper_bound"]
    return ExperimentResult(cols, rows, summary, ok)


def _power(m: mp.HPMap, n: int) -> mp.HPMap:
    out = m
    for _ in range(n - 1):
        out = mp.tensor_maps(out, m)
    return out


# 10 --------------------------------------------------------------------------


def expectation(p, seed, mode):
    n_pairs = int(p["n_pairs"])
    dims = [int(x) for x in p["dims"]]
    rngs = streams(seed, n_pairs)
    t = float(p["t"])

    def run(k):
        rng = rngs[k]
        d = dims[k * len(dims) // n_pairs]
        o = la.random_hermitian(d, rng, norm=float(p["o_norm"]))
        rho = la.random_density(d, rng)
        exact = float(np.real(np.trace(o @ rho)))
        est = apps.measure_expectation(rho, o, t, float(p["eps_channel"]))
        return [k, d, exact, est, abs(est - exact)]

    rows = _map_rows(run, range(n_pairs), p["workers"])
    worst = max(r[4] for r in rows)
    return ExperimentResult(["pair", "d", "exact", "estimate", "abs_error"], rows, {"max_abs_error": worst}, worst <= float(p["tol"]))


# registry --------------------------------------------------------------------

_COMMON = {"workers": 1}

EXPERIMENTS = {
    "step-order": (step_order, {"n_maps": 10, "d": 2, "include_pt": True, "d_a": 2, "d_b": 2, "dt_min": 1e-3, "dt_max": 1e-1, "n_dt": 9, "slope_tol": 0.1}),
    "k-scaling": (k_scaling, {"cases": ["swap", "reduction"], "d": 2, "d_a": 4, "d_b": 4, "k_exp_min": 5, "k_exp_max": 12, "t": math.pi, "eps": 0.1, "restarts": 1, "slope_tol": 0.1}),
    "pt-scaling": (pt_scaling, {"d_as": [2, 3, 4], "d_b": 2, "eps": 0.05, "t": 1.0, "restarts": 1}),
    "robustness": (robustness, {"cases": ["swap", "pt"], "d": 2, "d_a": 2, "d_b": 2, "n_runs": 100, "t": 1.0, "K": 20, "ds_max": 0.02, "dh_max": 0.02, "restarts": 4}),
    "gauge-freedom": (gauge_freedom, {"n_trials": 10, "d": 2, "K": 100, "t": 1.0, "tol": 1e-9}),
    "detect": (detect, {"n_draws": 200, "d_a": 4, "d_b": 4, "eps_channel": 1 / 12}),
    "negativity": (negativity, {"states": ["bell", "isotropic(d=4,x=0.8)", "product-haar(seed=11)"], "reps": 50, "eps": 0.1, "delta": 0.1, "tol": 0.1, "M": None, "n_truncation": 20}),
    "recover": (recover, {"gamma": 0.2, "psi": [1.0, 1.0], "guide": "noisy", "eps": 0.05, "delta": 0.1, "trials": 10000}),
    "lower-bound": (lower_bound, {"gamma": 0.5, "ns": [1, 2, 3], "eps": 1 / 6, "t": math.pi}),
    "expectation": (expectation, {"n_pairs": 50, "dims": [2, 4], "t": 1.0, "o_norm": 1.0, "eps_channel": 1e-3, "tol": 1e-3}),
}

DEFAULT_MODE = {"detect": "sampled", "negativity": "sampled", "recover": "sampled"}


def resolve_params(name: str, params: dict | None) -> dict:
    """Merge user parameters over the defaults, rejecting unknown keys."""
    if name not in EXPERIMENTS:
        raise ParameterError(f"unknown experiment {name!r}")
    defaults = {**_COMMON, **EXPERIMENTS[name][1]}
    params = dict(params or {})
    unknown = sorted(set(params) - set(defaults))
    if unknown:
        raise ParameterError(f"unknown parameter(s) for {name}: {', '.join(unknown)}")
    return {**defaults, **params}


def run_experiment(name: str, params: dict | None = None, seed: int = 0, mode: str | None = None) -> ExperimentResult:
    mode = mode or DEFAULT_MODE.get(name, "exact")
    if mode not in apps.MODES:
        raise ParameterError(f"mode must be one of {apps.MODES}")
    fn = EXPERIMENTS[name][0] if name in EXPERIMENTS else None
    p = resolve_params(name, params)
    return fn(p, int(seed), mode)

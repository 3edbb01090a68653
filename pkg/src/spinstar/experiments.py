"""Campaign drivers: length/noise sweeps, decay fits, disorder Monte Carlo,
spin-loss studies, and field-gradient sensing on the distributed pair.

Every campaign is a pure function of its specification and a single seed;
per-run randomness derives from stable spawn keys, so results are
reproducible and independent of execution order.  Campaigns of
independent runs accept a `jobs` argument for process-level parallelism.
"""

from __future__ import annotations

import math
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import curve_fit

from .chain import ChainSpec, DisorderSpec, loss_configurations, validate_star_geometry, GeometryError
from .entangle import EmResult, max_entanglement_scan
from .lindblad import NoiseSpec

# NV- electron gyromagnetic ratio, rad s^-1 T^-1
GAMMA_NV = 2 * math.pi * 28.03e9


class EstimationError(RuntimeError):
    """A sensing series is too short or too weak to extract a frequency."""


def stable_seed(master: int, purpose: str, *indices: int) -> int:
    """Deterministic child seed from (master, purpose, indices)."""
    key = [int(master) & 0xFFFFFFFF, zlib.crc32(purpose.encode())]
    key += [int(i) & 0xFFFFFFFF for i in indices]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _run_jobs(worker, payloads: list, jobs: int) -> list:
    """Run payloads through `worker`, optionally on a process pool.

    Results come back in payload order regardless of scheduling.
    """
    if jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))


# -- length sweep ------------------------------------------------------------

@dataclass(frozen=True)
class LengthPoint:
    m_chain: int
    t2_s: float
    result: EmResult

    @property
    def e_m(self) -> float:
        return self.result.e_m


def _scan_payload(payload: tuple) -> EmResult:
    spec, noise, kwargs = payload
    return max_entanglement_scan(spec, noise, **kwargs)


def _spec_for_length(m: int, base_spec: ChainSpec | None) -> ChainSpec:
    if base_spec is None:
        return ChainSpec(m_chain=m)
    return replace(base_spec, m_chain=m, lost_sites=frozenset(), disorder=None)


def sweep_length(
    ms, noise: NoiseSpec, n_outer: int = 3, jobs: int = 1,
    base_spec: ChainSpec | None = None, **scan_kwargs
) -> list[LengthPoint]:
    """One transfer scan per chain length, geometry-validated up front.

    `base_spec` carries spacing/coupling settings; its length, losses and
    disorder are replaced per sweep point.
    """
    ms = [int(m) for m in ms]
    for m in ms:
        if not validate_star_geometry(n_outer, m):
            raise GeometryError(
                f"N={n_outer}, M={m} violates the arm-count bound")
    payloads = [(_spec_for_length(m, base_spec), noise, scan_kwargs) for m in ms]
    results = _run_jobs(_scan_payload, payloads, jobs)
    return [LengthPoint(m, noise.t2_s, r) for m, r in zip(ms, results)]


# -- exponential decay fit ---------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Parameters of  e_m = prefactor * exp(-a * (1/t2)**b * m)."""

    prefactor: float
    a: float
    b: float
    residual: float   # rms of log-space residuals


def _fit_linear_given_b(b: float, ms, inv_t2s, logs):
    x = (inv_t2s ** b) * ms
    design = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
    resid = logs - design @ coef
    return coef, float(resid @ resid)


def fit_exponential(points, b_bounds: tuple = (0.05, 3.0)) -> FitResult:
    """Least squares of log e_m against a stretched-rate decay in (1/T2, M).

    `points` holds (m, t2_s, e_m) rows over a grid with at least three
    distinct lengths and three distinct coherence times.  The exponent b
    is located by golden-section search with a closed-form linear
    subproblem; bounds widen automatically if the optimum pins one.
    Nonpositive e_m rows are dropped with a warning.
    """
    rows = [(int(m), float(t2), float(em)) for m, t2, em in points]
    usable = [r for r in rows if r[2] > 0]
    if len(usable) < len(rows):
        warnings.warn(f"dropping {len(rows) - len(usable)} nonpositive e_m rows")
    if len(usable) < 6:
        raise ValueError("need at least 6 usable (m, t2, e_m) points")
    ms = np.array([r[0] for r in usable], dtype=float)
    inv = np.array([1.0 / r[1] for r in usable])
    logs = np.log(np.array([r[2] for r in usable]))
    if len(set(ms)) < 3 or len(set(np.round(inv, 12))) < 3:
        raise ValueError("need at least 3 distinct lengths and 3 distinct t2 values")

    lo, hi = b_bounds
    invphi = (math.sqrt(5) - 1) / 2

    def sse(b):
        return _fit_linear_given_b(b, ms, inv, logs)[1]

    for _ in range(12):  # widen while the optimum pins a bound
        a_, b_ = lo, hi
        c = b_ - invphi * (b_ - a_)
        d = a_ + invphi * (b_ - a_)
        fc, fd = sse(c), sse(d)
        while (b_ - a_) > 1e-10:
            if fc <= fd:
                b_, d, fd = d, c, fc
                c = b_ - invphi * (b_ - a_)
                fc = sse(c)
            else:
                a_, c, fc = c, d, fd
                d = a_ + invphi * (b_ - a_)
                fd = sse(d)
        b_opt = (a_ + b_) / 2
        span = hi - lo
        if b_opt - lo < 1e-3 * span and lo > 1e-3:
            lo = max(lo / 2, 1e-3)
        elif hi - b_opt < 1e-3 * span and hi < 50:
            hi = min(hi * 2, 50)
        else:
            break

    coef, best = _fit_linear_given_b(b_opt, ms, inv, logs)
    return FitResult(
        prefactor=float(np.exp(coef[0])),
        a=float(coef[1]),
        b=float(b_opt),
        residual=math.sqrt(best / len(usable)),
    )


# -- disorder Monte Carlo ----------------------------------------------------

@dataclass(frozen=True)
class DisorderPoint:
    m_chain: int
    mean_em: float
    std_em: float
    values: tuple


def _disorder_payload(payload: tuple) -> float:
    spec, noise, kwargs = payload
    return max_entanglement_scan(spec, noise, **kwargs).e_m


def disorder_monte_carlo(
    ms,
    noise: NoiseSpec,
    runs: int = 100,
    variance: float = 0.25,
    seed: int = 0,
    jobs: int = 1,
    base_spec: ChainSpec | None = None,
    **scan_kwargs,
) -> list[DisorderPoint]:
    """Mean and spread of e_m over independently disordered chains.

    Run k of length M uses the child seed (seed, "disorder", M, k), so a
    fixed master seed reproduces the table exactly.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    out = []
    for m in ms:
        m = int(m)
        base = _spec_for_length(m, base_spec)
        payloads = []
        for run in range(runs):
            dis = DisorderSpec(mean_nm=base.spacing_nm, variance_nm2=variance,
                               seed=stable_seed(seed, "disorder", m, run))
            payloads.append((replace(base, disorder=dis), noise, scan_kwargs))
        values = _run_jobs(_disorder_payload, payloads, jobs)
        arr = np.array(values)
        out.append(DisorderPoint(m, float(arr.mean()), float(arr.std()),
                                 tuple(float(v) for v in arr)))
    return out


# -- spin-loss study ---------------------------------------------------------

@dataclass(frozen=True)
class LossReport:
    """Per-configuration scans for a fixed loss count, plus their mean.

    `expectation` is None when no admissible configuration exists.
    """

    m_chain: int
    n_lost: int
    configs: tuple
    results: tuple
    expectation: float | None

    def e_m_by_config(self) -> dict:
        return {cfg: res.e_m for cfg, res in zip(self.configs, self.results)}


def loss_study(
    m_chain: int, noise: NoiseSpec, n_lost: int, jobs: int = 1, **scan_kwargs
) -> LossReport:
    """Scan every admissible loss configuration of the given size."""
    configs = loss_configurations(m_chain, n_lost)
    configs = sorted(configs, key=sorted)
    payloads = [(ChainSpec(m_chain=m_chain, lost_sites=cfg), noise, scan_kwargs)
                for cfg in configs]
    results = _run_jobs(_scan_payload, payloads, jobs)
    expectation = (float(np.mean([r.e_m for r in results]))
                   if results else None)
    return LossReport(
        m_chain=m_chain,
        n_lost=n_lost,
        configs=tuple(tuple(sorted(c)) for c in configs),
        results=tuple(results),
        expectation=expectation,
    )


# -- magnetic-field-gradient sensing ----------------------------------------

@dataclass(frozen=True)
class GradientSpec:
    """Linear field map and sampling grid for pair-coherence sensing.

    The field is ``B(x, y) = b0 + gx*x + gy*y`` (tesla, coordinates in
    meters); a register at (x, y) precesses at ``omega0 + gamma*B(x, y)``.
    `d_nm` is the register pair separation; `times_s` the readout grid.
    """

    b0_tesla: float = 0.0
    gx: float = 10.0
    gy: float = 10.0
    gamma: float = GAMMA_NV
    omega0: float = 0.0
    d_nm: float = 50.0
    times_s: tuple = ()

    def __post_init__(self):
        if not self.d_nm > 0:
            raise ValueError("pair separation must be positive")
        times = tuple(float(t) for t in self.times_s)
        object.__setattr__(self, "times_s", times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must ascend strictly")


COHERENCE_OP = np.zeros((4, 4), dtype=complex)
COHERENCE_OP[1, 2] = COHERENCE_OP[2, 1] = 1.0   # |01><10| + |10><01|


def ideal_bell_pair() -> np.ndarray:
    """The distributed single-excitation pair (|10> + |01>)/sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[1] = psi[2] = 1 / math.sqrt(2)
    return np.outer(psi, psi.conj())


def gradient_coherence(
    pair: np.ndarray, grad: GradientSpec, pos_a_nm, pos_b_nm
) -> np.ndarray:
    """Pair-coherence readout <C>(t) under local field-dependent phases.

    Each register's ``|1>`` level accumulates phase at its local
    transition frequency; the observable is the cross coherence
    ``|10><01| + |01><10|``.  For the ideal pair along a gradient axis
    this is exactly ``cos(gamma*G*D*t)``.
    """
    pair = np.asarray(pair, dtype=complex)
    if pair.shape != (4, 4):
        raise ValueError("pair state must be a two-qubit density matrix")
    pa = np.asarray(pos_a_nm, dtype=float) * 1e-9
    pb = np.asarray(pos_b_nm, dtype=float) * 1e-9
    if np.allclose(pa, pb):
        raise ValueError("registers coincide: zero separation")

    def omega(p):
        return grad.omega0 + grad.gamma * (grad.b0_tesla + grad.gx * p[0] + grad.gy * p[1])

    wa, wb = omega(pa), omega(pb)
    times = np.asarray(grad.times_s, dtype=float)
    coherence = pair[1, 2]  # <01| rho |10>
    # |01> advances at wb, |10> at wa; only the difference survives in <C>
    return 2.0 * (coherence * np.exp(1j * (wb - wa) * times)).real


def estimate_gradient(
    times_s, series, gamma: float = GAMMA_NV, d_nm: float = 50.0,
    min_amplitude: float = 0.05,
) -> float:
    """Recover the gradient magnitude from a coherence oscillation.

    Fits ``A*cos(w*t + phi)`` by coarse frequency search plus nonlinear
    refinement and returns ``w/(gamma*D)``.  Series spanning less than
    half an oscillation period, or with fitted amplitude below
    `min_amplitude`, are rejected.
    """
    t = np.asarray(times_s, dtype=float)
    y = np.asarray(series, dtype=float)
    if t.ndim != 1 or t.shape != y.shape or len(t) < 8:
        raise EstimationError("need at least 8 samples of a 1-d series")
    span = t[-1] - t[0]
    if span <= 0:
        raise EstimationError("time grid must span a positive interval")

    # coarse search over frequencies resolvable on the grid
    dt = np.diff(t).min()
    w_grid = np.linspace(math.pi / span, math.pi / dt, 2048)

    def sse(w):
        basis = np.column_stack([np.cos(w * t), np.sin(w * t)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        r = y - basis @ coef
        return r @ r, coef

    errs = [sse(w)[0] for w in w_grid]
    w0 = float(w_grid[int(np.argmin(errs))])

    def model(tt, amp, w, phi):
        return amp * np.cos(w * tt + phi)

    _, coef = sse(w0)
    a0 = float(np.hypot(*coef))
    phi0 = float(math.atan2(-coef[1], coef[0]))
    popt, _ = curve_fit(model, t, y, p0=(a0, w0, phi0), maxfev=20000)
    amp, w_fit = abs(float(popt[0])), abs(float(popt[1]))
    if amp < min_amplitude:
        raise EstimationError(f"oscillation amplitude {amp:.3f} too weak to fit")
    if w_fit * span < math.pi:
        raise EstimationError("series spans less than half an oscillation period")
    return w_fit / (gamma * d_nm * 1e-9)


def estimate_gradient_xy(
    pair: np.ndarray, grad: GradientSpec
) -> tuple[float, float]:
    """Two-round gradient readout: a pair along x, then a pair along y."""
    if not grad.times_s:
        raise ValueError("gradient spec carries no readout times")
    d = grad.d_nm
    sx = gradient_coherence(pair, grad, (0.0, 0.0), (d, 0.0))
    sy = gradient_coherence(pair, grad, (0.0, 0.0), (0.0, d))
    gx = estimate_gradient(grad.times_s, sx, grad.gamma, d)
    gy = estimate_gradient(grad.times_s, sy, grad.gamma, d)
    return gx, gy


def distributed_pair(spec: ChainSpec, noise: NoiseSpec, **scan_kwargs) -> np.ndarray:
    """Register pair state at the optimal transfer time of a chain arm."""
    from .entangle import pair_state_from_sector
    from .lindblad import evolve_chain

    result = max_entanglement_scan(spec, noise, **scan_kwargs)
    traj = evolve_chain(spec, noise, t_end=result.tau_star_s, n_samples=2,
                        method="sector",
                        register_state=scan_kwargs.get("register_state", "plus"))
    return pair_state_from_sector(traj.states[-1])

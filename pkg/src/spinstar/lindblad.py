"""Open-system dynamics with per-site sigma_z dephasing.

The master equation is

    drho/dt = -i [H, rho] + sum_i Gamma (Z_i rho Z_i - rho),

every site dephasing at the same rate Gamma = 1/T2 (Z_i dagger Z_i is
the identity, which collapses the anticommutator term).  A single-site
coherence therefore decays as exp(-2*Gamma*t).

Two integration paths produce identical physics:

* :func:`evolve` works on the full 2^n density matrix (the oracle path,
  practical up to a handful of sites);
* :func:`evolve_sector` exploits excitation-number conservation to evolve
  only the zero- and one-excitation blocks, an (n+1) x (n+1) matrix,
  which scales to arbitrary chain lengths.

Both use adaptive embedded Runge-Kutta (4)5, and both report trace drift
rather than renormalizing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .chain import ChainSpec, CouplingGraph, build_coupling_graph, single_excitation_matrix
from .qops import assert_density, n_qubits

RTOL_DEFAULT = 1e-8
ATOL_DEFAULT = 1e-12
TRACE_DRIFT_TOL = 1e-6
N_SAMPLES_DEFAULT = 2001
# Dimensionless window: kappa*t_end = WINDOW_KT * (M+2)/5
WINDOW_KT = 40.0


class IntegrationError(RuntimeError):
    """The integrator failed or violated a conservation bound."""


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform dephasing: per-site rate 1/t2_s with the sigma_z operator.

    An infinite `t2_s` turns the dissipator off.
    """

    t2_s: float = 1e-3

    def __post_init__(self):
        if not self.t2_s > 0:
            raise ValueError("t2_s must be positive (use math.inf for no noise)")

    @property
    def rate(self) -> float:
        return 0.0 if math.isinf(self.t2_s) else 1.0 / self.t2_s


@dataclass
class SectorState:
    """Density matrix restricted to the 0- and 1-excitation sectors.

    block00 is the vacuum population, block01[i] the coherence
    <site i excited| rho |vacuum>, block11 the one-excitation block.
    """

    block00: float
    block01: np.ndarray
    block11: np.ndarray

    @property
    def n_sites(self) -> int:
        return len(self.block01)

    def check(self, tol: float = 1e-8) -> None:
        total = self.block00 + float(np.trace(self.block11).real)
        if abs(total - 1.0) > tol:
            raise ValueError(f"sector populations sum to {total}, not 1")
        w = np.linalg.eigvalsh((self.block11 + self.block11.conj().T) / 2)
        if w.min() < -tol:
            raise ValueError("one-excitation block is not positive semidefinite")

    def to_reduced_matrix(self) -> np.ndarray:
        """(n+1) x (n+1) matrix on the basis (vacuum, site 0, ..., site n-1)."""
        n = self.n_sites
        red = np.zeros((n + 1, n + 1), dtype=complex)
        red[0, 0] = self.block00
        red[1:, 0] = self.block01
        red[0, 1:] = self.block01.conj()
        red[1:, 1:] = self.block11
        return red

    @classmethod
    def from_reduced_matrix(cls, red: np.ndarray) -> "SectorState":
        return cls(
            block00=float(red[0, 0].real),
            block01=red[1:, 0].copy(),
            block11=red[1:, 1:].copy(),
        )

    def to_full(self) -> np.ndarray:
        """Embed into the full 2^n space (site 0 as the leftmost factor)."""
        n = self.n_sites
        dim = 2 ** n
        rho = np.zeros((dim, dim), dtype=complex)
        idx = [2 ** (n - 1 - i) for i in range(n)]
        rho[0, 0] = self.block00
        for i, bi in enumerate(idx):
            rho[bi, 0] = self.block01[i]
            rho[0, bi] = np.conj(self.block01[i])
            for j, bj in enumerate(idx):
                rho[bi, bj] = self.block11[i, j]
        return rho


def sector_from_full(rho: np.ndarray, tol: float = 1e-10) -> SectorState:
    """Project a full density matrix onto the 0+1 excitation representation.

    Rejects states with weight outside those sectors.
    """
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits(rho.shape[0])
    idx = [2 ** (n - 1 - i) for i in range(n)]
    keep = [0] + idx
    weight_kept = sum(rho[a, a].real for a in keep)
    if abs(weight_kept - np.trace(rho).real) > tol:
        raise ValueError("state has weight outside the 0+1 excitation sectors")
    block01 = np.array([rho[b, 0] for b in idx])
    block11 = np.array([[rho[a, b] for b in idx] for a in idx])
    return SectorState(float(rho[0, 0].real), block01, block11)


@dataclass
class Trajectory:
    """Sampled solution of the master equation.

    `states` holds full density matrices (kind "full") or
    :class:`SectorState` objects (kind "sector") at `times_s`;
    `times_kt` is the same grid in dimensionless kappa*t.
    """

    times_s: np.ndarray
    times_kt: np.ndarray
    states: list
    kind: str
    n_sites: int

    def full_states(self) -> list:
        if self.kind == "full":
            return self.states
        return [s.to_full() for s in self.states]


def initial_transfer_state(
    spec: ChainSpec, register_state: str = "plus", form: str = "sector"
):
    """State used for transfer runs: register 0 prepared, all else ``|0>``.

    `register_state` selects the register-0 preparation: ``"plus"`` is the
    coherent superposition ``(|0> + |1>)/sqrt(2)``, ``"one"`` the bare
    excitation ``|1>``.  `form` picks the representation ("sector" or
    "full").
    """
    n = spec.n_sites
    if register_state == "plus":
        block00 = 0.5
        block01 = np.zeros(n, dtype=complex)
        block01[0] = 0.5
        block11 = np.zeros((n, n), dtype=complex)
        block11[0, 0] = 0.5
    elif register_state == "one":
        block00 = 0.0
        block01 = np.zeros(n, dtype=complex)
        block11 = np.zeros((n, n), dtype=complex)
        block11[0, 0] = 1.0
    else:
        raise ValueError("register_state must be 'plus' or 'one'")
    state = SectorState(block00, block01, block11)
    if form == "sector":
        return state
    if form == "full":
        return state.to_full()
    raise ValueError("form must be 'sector' or 'full'")


def _z_diagonals(n: int) -> np.ndarray:
    """Rows: diagonal of sigma_z on each site over the 2^n basis."""
    z = np.empty((n, 2 ** n))
    for site in range(n):
        bit = (np.arange(2 ** n) >> (n - 1 - site)) & 1
        z[site] = 1.0 - 2.0 * bit
    return z


def _dephasing_mask(n: int) -> np.ndarray:
    """Entrywise dissipator factor: sum_i (z_i(a) z_i(b) - 1)."""
    z = _z_diagonals(n)
    return z.T @ z - float(n)


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """Right-hand side of the master equation on the full space."""
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape != h.shape:
        raise ValueError("state and Hamiltonian dimensions differ")
    n = n_qubits(rho.shape[0])
    out = -1j * (h @ rho - rho @ h)
    gamma = noise.rate
    if gamma > 0:
        out += gamma * _dephasing_mask(n) * rho
    return out


def _check_trace_drift(trace_series: np.ndarray) -> None:
    drift = float(np.abs(trace_series - 1.0).max())
    if drift > TRACE_DRIFT_TOL:
        raise IntegrationError(f"trace drift {drift:.3e} exceeds {TRACE_DRIFT_TOL}")


def _integrate(rhs, y0: np.ndarray, t_end: float, t_eval: np.ndarray,
               rtol: float, atol: float):
    sol = solve_ivp(rhs, (0.0, t_end), y0, t_eval=t_eval, method="RK45",
                    rtol=rtol, atol=atol, dense_output=False)
    if not sol.success:
        raise IntegrationError(f"integrator failed: {sol.message}")
    return sol


def evolve(
    rho0: np.ndarray,
    h: np.ndarray,
    noise: NoiseSpec,
    t_end: float,
    n_samples: int = N_SAMPLES_DEFAULT,
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
    kappa_angular: float = 1.0,
) -> Trajectory:
    """Integrate the master equation on the full Hilbert space.

    Stores `n_samples` equally spaced states on [0, t_end].  Trace drift
    beyond the tolerance raises; states are never silently renormalized.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    assert_density(rho0)
    n = n_qubits(rho0.shape[0])
    h = np.asarray(h, dtype=complex)
    if h.shape != rho0.shape:
        raise ValueError("state and Hamiltonian dimensions differ")
    gamma = noise.rate
    mask = gamma * _dephasing_mask(n) if gamma > 0 else None
    dim = rho0.shape[0]

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        d = -1j * (h @ rho - rho @ h)
        if mask is not None:
            d += mask * rho
        return d.ravel()

    times = np.linspace(0.0, t_end, n_samples)
    sol = _integrate(rhs, rho0.ravel(), t_end, times, rtol, atol)
    states = [sol.y[:, k].reshape(dim, dim) for k in range(sol.y.shape[1])]
    _check_trace_drift(np.array([np.trace(s).real for s in states]))
    return Trajectory(times_s=times, times_kt=kappa_angular * times,
                      states=states, kind="full", n_sites=n)


def _sector_generator(h1: np.ndarray, gamma: float):
    """Reduced Hamiltonian and dissipator mask on the (n+1) basis."""
    n = h1.shape[0]
    h_red = np.zeros((n + 1, n + 1), dtype=complex)
    h_red[1:, 1:] = h1
    mask = None
    if gamma > 0:
        # vacuum-excitation coherences decay at 2*Gamma, coherences between
        # different excitation sites at 4*Gamma, populations untouched
        mask = np.full((n + 1, n + 1), -4.0)
        mask[0, :] = -2.0
        mask[:, 0] = -2.0
        np.fill_diagonal(mask, 0.0)
        mask *= gamma
    return h_red, mask


def evolve_sector(
    rho0: SectorState,
    graph: CouplingGraph | np.ndarray,
    noise: NoiseSpec,
    t_end: float,
    n_samples: int = N_SAMPLES_DEFAULT,
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
    kappa_angular: float = 1.0,
) -> Trajectory:
    """Integrate the master equation on the excitation-reduced representation.

    The generator closes on the 0+1 excitation blocks (the Hamiltonian
    conserves excitation number and the dephasing operators are diagonal),
    so this reproduces :func:`evolve` exactly at (n+1)^2 cost.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not isinstance(rho0, SectorState):
        raise ValueError("evolve_sector expects a SectorState; "
                         "use sector_from_full for full-space input")
    rho0.check()
    h1 = graph if isinstance(graph, np.ndarray) else single_excitation_matrix(graph)
    n = rho0.n_sites
    if h1.shape != (n, n):
        raise ValueError("coupling matrix does not match the state size")
    h_red, mask = _sector_generator(np.asarray(h1, dtype=complex), noise.rate)
    dim = n + 1

    def rhs(_t, y):
        red = y.reshape(dim, dim)
        d = -1j * (h_red @ red - red @ h_red)
        if mask is not None:
            d += mask * red
        return d.ravel()

    times = np.linspace(0.0, t_end, n_samples)
    sol = _integrate(rhs, rho0.to_reduced_matrix().ravel(), t_end, times, rtol, atol)
    states = [SectorState.from_reduced_matrix(sol.y[:, k].reshape(dim, dim))
              for k in range(sol.y.shape[1])]
    _check_trace_drift(np.array([s.block00 + np.trace(s.block11).real
                                 for s in states]))
    return Trajectory(times_s=times, times_kt=kappa_angular * times,
                      states=states, kind="sector", n_sites=n)


def default_window_s(spec: ChainSpec) -> float:
    """Transfer window in seconds, scaled with the arm length."""
    return (WINDOW_KT / spec.kappa_angular) * ((spec.m_chain + 2) / 5.0)


def evolve_chain(
    spec: ChainSpec,
    noise: NoiseSpec,
    t_end: float | None = None,
    n_samples: int = N_SAMPLES_DEFAULT,
    method: str = "sector",
    register_state: str = "plus",
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
) -> Trajectory:
    """Build the arm for `spec` and integrate the transfer initial state."""
    graph = build_coupling_graph(spec)
    t_end = default_window_s(spec) if t_end is None else t_end
    if method == "sector":
        state0 = initial_transfer_state(spec, register_state, form="sector")
        return evolve_sector(state0, graph, noise, t_end, n_samples,
                             rtol, atol, kappa_angular=spec.kappa_angular)
    if method == "full":
        from .chain import build_chain_hamiltonian

        h, _ = build_chain_hamiltonian(spec)
        rho0 = initial_transfer_state(spec, register_state, form="full")
        return evolve(rho0, h, noise, t_end, n_samples, rtol, atol,
                      kappa_angular=spec.kappa_angular)
    raise ValueError("method must be 'sector' or 'full'")


def observable_expectation(traj: Trajectory, op) -> np.ndarray:
    """Real expectation series Tr(rho(t) O) along a trajectory.

    `op` is either a dense operator matching the trajectory's space or a
    site-local descriptor: ``"identity"``, ``("n_exc",)``, ``("sz", i)``
    or ``("pop", i)``.  Descriptors evaluate directly on sector states.
    """
    if isinstance(op, str):
        op = (op,)
    if isinstance(op, tuple):
        return _descriptor_expectation(traj, op)
    op = np.asarray(op, dtype=complex)
    hermitian = np.abs(op - op.conj().T).max() < 1e-12
    out = np.empty(len(traj.states))
    for k, rho in enumerate(traj.full_states()):
        if rho.shape != op.shape:
            raise ValueError("operator dimension does not match trajectory")
        val = np.trace(rho @ op)
        if hermitian and abs(val.imag) > 1e-8:
            raise ValueError(
                f"expectation of Hermitian operator has imaginary part {val.imag:.3e}")
        out[k] = val.real
    return out


def _descriptor_expectation(traj: Trajectory, desc: tuple) -> np.ndarray:
    name = desc[0]
    if traj.kind != "sector":
        # full-space path goes through dense operators
        from .qops import embed, number_operator, pauli

        n = traj.n_sites
        if name == "identity":
            op = np.eye(2 ** n, dtype=complex)
        elif name == "n_exc":
            op = number_operator(n)
        elif name == "sz":
            op = embed(pauli("z"), desc[1], n)
        elif name == "pop":
            op = embed(np.diag([0.0, 1.0]).astype(complex), desc[1], n)
        else:
            raise ValueError(f"unknown observable descriptor {desc!r}")
        return observable_expectation(traj, op)
    out = np.empty(len(traj.states))
    for k, s in enumerate(traj.states):
        if name == "identity":
            out[k] = s.block00 + np.trace(s.block11).real
        elif name == "n_exc":
            out[k] = np.trace(s.block11).real
        elif name == "sz":
            out[k] = (s.block00 + np.trace(s.block11).real) - 2 * s.block11[desc[1], desc[1]].real
        elif name == "pop":
            out[k] = s.block11[desc[1], desc[1]].real
        else:
            raise ValueError(f"unknown observable descriptor {desc!r}")
    return out


def export_trajectory_csv(traj: Trajectory, path, observables: dict) -> None:
    """Write (time_s, time_kt, observables...) rows to a CSV file."""
    series = {name: observable_expectation(traj, op)
              for name, op in observables.items()}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "time_kt", *series.keys()])
        for k in range(len(traj.times_s)):
            row = [f"{traj.times_s[k]:.12g}", f"{traj.times_kt[k]:.12g}"]
            row += [f"{series[name][k]:.12g}" for name in series]
            writer.writerow(row)

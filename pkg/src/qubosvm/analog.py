"""Adiabatic analog evolution of a driven Rydberg register, with sampling.

The Hamiltonian (hbar = 1, frequencies in rad/us, times in us) is

    H(t) = Omega(t)/2 * sum_i sigma_x_i  -  delta(t) * sum_i n_i
           + sum_{i<j} U_ij n_i n_j

with U_ij = C6 / r_ij^6.  Integration uses a Strang-split unitary
propagator: the diagonal part (detuning + interactions) is applied exactly
and the transverse drive as a product of single-qubit rotations, so the
norm is conserved to machine precision.

Measurement convention: a Rydberg-excited atom reads out as bit 1, so a
sampled bitstring plugs directly into the QUBO cost.  Atom i maps to
character i of the bitstring key; the string is the binary expansion of
the state-vector index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import DEFAULT_C6, HardwareConstraints, Register, interaction_matrix, validate_register
from .qubo import Bitstring, QuboMatrix

OMEGA_CAP = 15.71  # rad/us, hardware Rabi amplitude limit
DELTA_START = -10.0
DELTA_END = 10.0
DEFAULT_TAU = 10.0
QPU_TAU = 4.0
DEFAULT_DT = 1e-3
STATE_ATOM_LIMIT = 16


@dataclass
class PulseSchedule:
    """Time grids of the Rabi frequency and detuning waveforms.

    ``omega`` and ``delta`` are sampled at t_k = k*dt for k = 0..steps,
    where steps = tau/dt.  The integrator uses midpoint averages of
    adjacent samples.
    """

    tau: float
    dt: float
    omega: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=np.float64)
        self.delta = np.asarray(self.delta, dtype=np.float64)
        if self.tau <= 0 or self.dt <= 0:
            raise ValueError("tau and dt must be positive")
        steps = self.steps
        if abs(steps * self.dt - self.tau) > 1e-9 * max(1.0, self.tau):
            raise ValueError("dt must divide tau")
        if self.omega.shape != (steps + 1,) or self.delta.shape != (steps + 1,):
            raise ValueError("waveforms must be sampled at tau/dt + 1 grid points")

    @property
    def steps(self) -> int:
        return int(round(self.tau / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    @property
    def peak_omega(self) -> float:
        return float(self.omega.max())

    def to_json(self) -> dict:
        return {
            "tau_us": self.tau,
            "dt_us": self.dt,
            "peak_omega": self.peak_omega,
            "delta_start": float(self.delta[0]),
            "delta_end": float(self.delta[-1]),
            "samples": [
                [float(t), float(o), float(d)]
                for t, o, d in zip(self.times, self.omega, self.delta)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PulseSchedule":
        samples = np.asarray(obj["samples"], dtype=np.float64)
        return cls(
            tau=float(obj["tau_us"]),
            dt=float(obj["dt_us"]),
            omega=samples[:, 1],
            delta=samples[:, 2],
        )


def save_schedule(schedule: PulseSchedule, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schedule.to_json()))


def load_schedule(path: str | Path) -> PulseSchedule:
    return PulseSchedule.from_json(json.loads(Path(path).read_text()))


def make_schedule(
    peak_omega: float,
    tau: float = DEFAULT_TAU,
    dt: float = DEFAULT_DT,
    delta_start: float = DELTA_START,
    delta_end: float = DELTA_END,
) -> PulseSchedule:
    """Raised-cosine Rabi bell with a linear detuning ramp."""
    steps = int(round(tau / dt))
    t = np.arange(steps + 1) * dt
    omega = peak_omega * np.sin(np.pi * t / tau) ** 2
    omega[0] = omega[-1] = 0.0
    delta = delta_start + (delta_end - delta_start) * t / tau
    return PulseSchedule(tau=tau, dt=dt, omega=omega, delta=delta)


def schedule_peak(qtilde: QuboMatrix, omega_cap: float = OMEGA_CAP) -> float:
    """Pulse amplitude rule: the matrix median, capped by the hardware limit.

    A non-positive median (possible for strongly mixed-sign matrices) would
    switch the drive off entirely; the cap is used instead.
    """
    med = float(np.median(qtilde.entries))
    if med <= 0 or med >= omega_cap:
        return omega_cap
    return med


def build_schedule(
    qtilde: QuboMatrix,
    tau: float = DEFAULT_TAU,
    omega_cap: float = OMEGA_CAP,
    dt: float = DEFAULT_DT,
    delta_start: float = DELTA_START,
    delta_end: float = DELTA_END,
    qpu_mode: bool = False,
) -> PulseSchedule:
    """Training schedule for a QUBO: bell-shaped drive, linear detuning ramp.

    ``qpu_mode`` selects the shortened hardware variant (tau = 4 us).
    """
    if qpu_mode:
        tau = QPU_TAU
    return make_schedule(
        peak_omega=schedule_peak(qtilde, omega_cap),
        tau=tau,
        dt=dt,
        delta_start=delta_start,
        delta_end=delta_end,
    )


@dataclass
class NoiseConfig:
    """Surrogate noise channels: SPAM readout flips plus coherent jitter.

    ``spam_eps`` is the probability a 1 reads out as 0; ``spam_eps_prime``
    the reverse.  Jitter draws one multiplicative Rabi-scale factor and one
    additive detuning offset per evolution.
    """

    spam_eps: float = 0.03
    spam_eps_prime: float = 0.08
    amplitude_jitter_sigma: float = 0.02
    detuning_offset_sigma: float = 0.2
    spam_enabled: bool = True
    amplitude_enabled: bool = True
    detuning_enabled: bool = True

    def __post_init__(self):
        for p in (self.spam_eps, self.spam_eps_prime):
            if not 0.0 <= p <= 1.0:
                raise ValueError("SPAM probabilities must be in [0, 1]")
        if self.amplitude_jitter_sigma < 0 or self.detuning_offset_sigma < 0:
            raise ValueError("jitter sigmas must be >= 0")

    @classmethod
    def disabled(cls) -> "NoiseConfig":
        return cls(spam_enabled=False, amplitude_enabled=False, detuning_enabled=False)

    def coherent_active(self) -> bool:
        return (self.amplitude_enabled and self.amplitude_jitter_sigma > 0) or (
            self.detuning_enabled and self.detuning_offset_sigma > 0
        )

    def spam_active(self) -> bool:
        return self.spam_enabled and (self.spam_eps > 0 or self.spam_eps_prime > 0)

    def to_json(self) -> dict:
        return {
            "spam_eps": self.spam_eps,
            "spam_eps_prime": self.spam_eps_prime,
            "amplitude_jitter_sigma": self.amplitude_jitter_sigma,
            "detuning_offset_sigma": self.detuning_offset_sigma,
            "spam_enabled": self.spam_enabled,
            "amplitude_enabled": self.amplitude_enabled,
            "detuning_enabled": self.detuning_enabled,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseConfig":
        return cls(**obj)


@dataclass
class QuantumState:
    """State vector over n atoms; index bit n-1-i holds atom i."""

    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        n = self.amplitudes.shape[0]
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("state length must be a power of two >= 2")

    @property
    def n_atoms(self) -> int:
        return int(self.amplitudes.shape[0]).bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _bit_matrix(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return ((idx[:, None] >> (n - 1 - np.arange(n))) & 1).astype(np.float64)


def _diagonal_terms(reg: Register, c6: float) -> tuple[np.ndarray, np.ndarray]:
    """(popcount, interaction diagonal) over all basis states."""
    n = reg.n_atoms
    bits = _bit_matrix(n)
    u = interaction_matrix(reg, c6)
    diag_u = np.einsum("bi,ij,bj->b", bits, np.triu(u, 1), bits)
    return bits.sum(axis=1).astype(np.int64), diag_u


def dense_hamiltonian(reg: Register, omega: float, delta: float,
                      c6: float = DEFAULT_C6) -> np.ndarray:
    """Full 2^n x 2^n Hamiltonian at fixed drive values (small n only)."""
    n = reg.n_atoms
    if n > 10:
        raise ValueError("dense Hamiltonian limited to 10 atoms")
    pop, diag_u = _diagonal_terms(reg, c6)
    h = np.diag(diag_u - delta * pop).astype(np.complex128)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    for q in range(n):
        op = np.array([[1.0]], dtype=np.complex128)
        for r in range(n):
            op = np.kron(op, sx if r == q else eye)
        h += 0.5 * omega * op
    return h


def evolve(
    reg: Register,
    schedule: PulseSchedule,
    c6: float = DEFAULT_C6,
    noise: NoiseConfig | None = None,
    seed: int = 0,
    constraints: HardwareConstraints | None = None,
    observer=None,
    atom_limit: int = STATE_ATOM_LIMIT,
) -> QuantumState:
    """Integrate the driven register from the all-ground product state.

    With ``noise`` given, one coherent jitter realization (Rabi scale,
    detuning offset) is drawn from ``seed`` before integration; channels
    that are disabled leave the dynamics bit-identical to the noiseless
    run.  ``observer(t, amplitudes)`` is invoked after every step.
    """
    n = reg.n_atoms
    if n > atom_limit:
        raise ValueError(f"{n} atoms exceed the state-vector limit {atom_limit}")
    if constraints is not None:
        violations = validate_register(reg, constraints)
        if violations:
            raise ValueError(f"register violates constraints: {violations[0].detail}")

    omega_scale = 1.0
    delta_offset = 0.0
    if noise is not None and noise.coherent_active():
        rng = np.random.default_rng(seed)
        if noise.amplitude_enabled and noise.amplitude_jitter_sigma > 0:
            omega_scale = 1.0 + noise.amplitude_jitter_sigma * rng.standard_normal()
        if noise.detuning_enabled and noise.detuning_offset_sigma > 0:
            delta_offset = noise.detuning_offset_sigma * rng.standard_normal()

    pop, diag_u = _diagonal_terms(reg, c6)
    dim = 1 << n
    dt = schedule.dt
    psi = np.zeros(dim, dtype=np.complex128)
    psi[0] = 1.0

    phase_u_half = np.exp(-0.5j * dt * diag_u)
    omega_mid = omega_scale * 0.5 * (schedule.omega[:-1] + schedule.omega[1:])
    delta_mid = delta_offset + 0.5 * (schedule.delta[:-1] + schedule.delta[1:])
    pop_range = np.arange(n + 1)

    for k in range(schedule.steps):
        zpow = np.exp(0.5j * dt * delta_mid[k]) ** pop_range
        half = phase_u_half * zpow[pop]
        psi *= half
        theta = 0.5 * omega_mid[k] * dt
        c, s = np.cos(theta), -1j * np.sin(theta)
        for q in range(n):
            view = psi.reshape(1 << q, 2, -1)
            a = view[:, 0, :].copy()
            b = view[:, 1, :]
            view[:, 0, :] = c * a + s * b
            view[:, 1, :] = s * a + c * b
        psi *= half
        if observer is not None:
            observer((k + 1) * dt, psi)
    return QuantumState(psi)


@dataclass
class ShotHistogram:
    """Measured bitstring frequencies; keys are '0'/'1' strings."""

    counts: dict[str, int]
    total_shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total_shots:
            raise ValueError("counts must sum to total_shots")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be non-negative")

    def probabilities(self) -> dict[str, float]:
        return {k: c / self.total_shots for k, c in self.counts.items()}

    def merged_with(self, other: "ShotHistogram") -> "ShotHistogram":
        counts = dict(self.counts)
        for k, c in other.counts.items():
            counts[k] = counts.get(k, 0) + c
        return ShotHistogram(counts, self.total_shots + other.total_shots)

    def to_json(self) -> dict:
        return {"total_shots": self.total_shots, "counts": dict(sorted(self.counts.items()))}

    @classmethod
    def from_json(cls, obj: dict) -> "ShotHistogram":
        return cls(dict(obj["counts"]), int(obj["total_shots"]))


def save_histogram(hist: ShotHistogram, path: str | Path) -> None:
    Path(path).write_text(json.dumps(hist.to_json()))


def load_histogram(path: str | Path) -> ShotHistogram:
    return ShotHistogram.from_json(json.loads(Path(path).read_text()))


def key_to_bits(key: str) -> Bitstring:
    return tuple(int(ch) for ch in key)


def bits_to_key(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def sample(
    state: QuantumState,
    n_shots: int,
    noise: NoiseConfig | None = None,
    seed: int = 0,
) -> ShotHistogram:
    """Draw projective measurements; apply SPAM readout flips if enabled."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    probs = state.populations()
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"state is not normalized (sum p = {total:.8f})")
    probs = probs / total
    rng = np.random.default_rng(seed)
    n = state.n_atoms
    outcomes = rng.choice(probs.shape[0], size=n_shots, p=probs)
    bits = ((outcomes[:, None] >> (n - 1 - np.arange(n))) & 1).astype(np.uint8)
    if noise is not None and noise.spam_active():
        flips = rng.random(bits.shape)
        one_to_zero = (bits == 1) & (flips < noise.spam_eps)
        zero_to_one = (bits == 0) & (flips < noise.spam_eps_prime)
        bits = np.where(one_to_zero, 0, np.where(zero_to_one, 1, bits)).astype(np.uint8)
    keys, counts = np.unique(bits, axis=0, return_counts=True)
    histogram = {bits_to_key(row): int(c) for row, c in zip(keys, counts)}
    return ShotHistogram(histogram, n_shots)


def most_probable_state(hist: ShotHistogram) -> Bitstring:
    """Modal bitstring; ties break toward the lexicographically smallest."""
    if hist.total_shots < 1 or not hist.counts:
        raise ValueError("histogram is empty")
    best = min(hist.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return key_to_bits(best[0])


def ground_state_overlap(state: QuantumState, target) -> float:
    """|<target|state>|^2 for a computational basis target."""
    bits = [int(b) for b in target]
    if len(bits) != state.n_atoms:
        raise ValueError("target length does not match atom count")
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    return float(np.abs(state.amplitudes[idx]) ** 2)

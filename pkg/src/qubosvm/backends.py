"""Training backends: turn a QUBO into a histogram of candidate solutions.

Four backends share one output type (:class:`~qubosvm.analog.ShotHistogram`):

- ``brute_force``: exact enumeration; ranks become synthetic counts.
- ``simulated_anneal``: one annealing restart per shot.
- ``analog_ideal`` / ``analog_noisy``: embed the QUBO into a register,
  build a pulse schedule, integrate, and sample.

For the analog backends the QUBO is first rescaled by a positive factor
(argmin-preserving) so its couplings land in the interaction window the
geometry can realize; the drive amplitude follows the realized coupling
scale.  The payload handed to the analog run contains the register and
schedule only, never training data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analog import (
    OMEGA_CAP,
    NoiseConfig,
    PulseSchedule,
    ShotHistogram,
    bits_to_key,
    make_schedule,
    evolve,
    sample,
)
from .embedding import (
    DEFAULT_C6,
    EmbeddingReport,
    EmbedOptions,
    HardwareConstraints,
    Register,
    embed,
)
from .qubo import QuboMatrix, brute_force_solve, simulated_anneal, symmetrize

BACKENDS = ("brute_force", "simulated_anneal", "analog_ideal", "analog_noisy")

# target median of the positive couplings after rescaling, rad/us; keeps
# pair interactions comparable to the detuning ramp the ramp ends at
COUPLING_TARGET = 5.0


@dataclass
class AnalogPayload:
    """Everything the analog run receives: geometry and pulses only."""

    register: Register
    schedule: PulseSchedule
    shots: int
    seed: int
    c6: float = DEFAULT_C6
    noise: NoiseConfig | None = None

    def to_json(self) -> dict:
        out = {
            "register": self.register.to_json(),
            "schedule": self.schedule.to_json(),
            "shots": self.shots,
            "seed": self.seed,
            "c6": self.c6,
        }
        if self.noise is not None:
            out["noise"] = self.noise.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AnalogPayload":
        return cls(
            register=Register.from_json(obj["register"]),
            schedule=PulseSchedule.from_json(obj["schedule"]),
            shots=int(obj["shots"]),
            seed=int(obj["seed"]),
            c6=float(obj.get("c6", DEFAULT_C6)),
            noise=NoiseConfig.from_json(obj["noise"]) if "noise" in obj else None,
        )


def save_payload(payload: AnalogPayload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload.to_json()))


def load_payload(path: str | Path) -> AnalogPayload:
    return AnalogPayload.from_json(json.loads(Path(path).read_text()))


def hardware_scale(
    qtilde: QuboMatrix,
    constraints: HardwareConstraints | None = None,
    c6: float = DEFAULT_C6,
    coupling_target: float = COUPLING_TARGET,
) -> float:
    """Positive prefactor mapping the QUBO into the interaction window.

    Scaling a QUBO by g > 0 leaves its minimizer unchanged, so the factor
    is free.  It is chosen so the median positive off-diagonal coupling
    reaches ``coupling_target``, clamped so the strongest coupling stays
    realizable at just above the minimum atom spacing.
    """
    constraints = constraints or HardwareConstraints()
    sym = 0.5 * (qtilde.entries + qtilde.entries.T)
    off = sym[np.triu_indices(qtilde.dim, 1)]
    positive = off[off > 0]
    if positive.size == 0:
        return 1.0
    u_head = c6 / (constraints.min_distance * 1.05) ** 6
    g = coupling_target / float(np.median(positive))
    return float(min(g, u_head / float(positive.max())))


def analog_drive_peak(target: QuboMatrix, omega_cap: float = OMEGA_CAP) -> float:
    """Drive amplitude for a hardware-scaled QUBO.

    The median of the positive couplings (the interaction scale the
    register realizes), capped by the hardware limit.  Falls back to the
    cap when there is nothing to couple.
    """
    sym = 0.5 * (target.entries + target.entries.T)
    off = sym[np.triu_indices(target.dim, 1)]
    positive = off[off > 0]
    if positive.size == 0:
        return omega_cap
    return float(min(np.median(positive), omega_cap))


@dataclass
class AnalogJob:
    """Prepared analog training run plus its provenance."""

    payload: AnalogPayload
    embedding: EmbeddingReport
    qubo_scale: float


def prepare_analog_job(
    qtilde: QuboMatrix,
    shots: int,
    seed: int,
    constraints: HardwareConstraints | None = None,
    embed_options: EmbedOptions | None = None,
    noise: NoiseConfig | None = None,
    c6: float = DEFAULT_C6,
    tau: float = 10.0,
    dt: float = 1e-3,
    omega_cap: float = OMEGA_CAP,
    qpu_mode: bool = False,
) -> AnalogJob:
    """Rescale, embed, and schedule a QUBO for the analog backend."""
    constraints = constraints or HardwareConstraints()
    g = hardware_scale(qtilde, constraints, c6)
    scaled = QuboMatrix(g * qtilde.entries)
    report = embed(scaled, constraints, embed_options, seed=seed, c6=c6)
    schedule = make_schedule(
        peak_omega=analog_drive_peak(scaled, omega_cap),
        tau=4.0 if qpu_mode else tau,
        dt=dt,
    )
    payload = AnalogPayload(
        register=report.register,
        schedule=schedule,
        shots=shots,
        seed=seed,
        c6=c6,
        noise=noise,
    )
    return AnalogJob(payload=payload, embedding=report, qubo_scale=g)


def run_analog(payload: AnalogPayload, coherent_runs: int | None = 32) -> ShotHistogram:
    """Execute an analog training run from its payload alone.

    With coherent jitter enabled the evolution is re-run per realization
    and the shots are split across ``coherent_runs`` of them (``None``
    re-runs per shot).  Without coherent noise a single evolution is
    sampled ``shots`` times.
    """
    noise = payload.noise
    if noise is None or not noise.coherent_active():
        state = evolve(payload.register, payload.schedule, c6=payload.c6,
                       noise=noise, seed=payload.seed)
        return sample(state, payload.shots, noise=noise, seed=payload.seed)

    runs = payload.shots if coherent_runs is None else min(payload.shots, coherent_runs)
    base, extra = divmod(payload.shots, runs)
    seeds = np.random.SeedSequence(payload.seed).spawn(runs)
    merged: ShotHistogram | None = None
    for r, ss in enumerate(seeds):
        child = np.random.default_rng(ss)
        evolve_seed = int(child.integers(2**31))
        sample_seed = int(child.integers(2**31))
        state = evolve(payload.register, payload.schedule, c6=payload.c6,
                       noise=noise, seed=evolve_seed)
        shots_r = base + (1 if r < extra else 0)
        if shots_r == 0:
            continue
        hist = sample(state, shots_r, noise=noise, seed=sample_seed)
        merged = hist if merged is None else merged.merged_with(hist)
    assert merged is not None
    return merged


@dataclass
class TrainResult:
    """Histogram of candidate states plus analog provenance when applicable."""

    histogram: ShotHistogram
    backend: str
    job: AnalogJob | None = None


def _brute_force_histogram(qtilde: QuboMatrix, max_states: int) -> ShotHistogram:
    res = brute_force_solve(qtilde, top_k=max_states)
    counts = {}
    k = len(res.ranked)
    for rank, (bits, _) in enumerate(res.ranked):
        counts[bits_to_key(bits)] = k - rank
    return ShotHistogram(counts, sum(counts.values()))


def _annealing_histogram(qtilde: QuboMatrix, shots: int, sweeps: int, seed: int) -> ShotHistogram:
    counts: dict[str, int] = {}
    for ss in np.random.SeedSequence(seed).spawn(shots):
        child_seed = int(np.random.default_rng(ss).integers(2**31))
        res = simulated_anneal(qtilde, sweeps=sweeps, seed=child_seed)
        key = bits_to_key(res.best)
        counts[key] = counts.get(key, 0) + 1
    return ShotHistogram(counts, shots)


def train_qubo(
    qtilde: QuboMatrix,
    backend: str,
    shots: int = 1000,
    seed: int = 0,
    max_states: int = 32,
    sweeps: int = 400,
    constraints: HardwareConstraints | None = None,
    embed_options: EmbedOptions | None = None,
    noise: NoiseConfig | None = None,
    coherent_runs: int | None = 32,
    c6: float = DEFAULT_C6,
    tau: float = 10.0,
    dt: float = 1e-3,
    qpu_mode: bool = False,
) -> TrainResult:
    """Solve a training QUBO with the chosen backend."""
    qtilde = symmetrize(qtilde)
    if backend == "brute_force":
        return TrainResult(_brute_force_histogram(qtilde, max_states), backend)
    if backend == "simulated_anneal":
        return TrainResult(_annealing_histogram(qtilde, shots, sweeps, seed), backend)
    if backend in ("analog_ideal", "analog_noisy"):
        if backend == "analog_ideal":
            noise = None
        elif noise is None:
            noise = NoiseConfig()
        job = prepare_analog_job(
            qtilde, shots, seed,
            constraints=constraints, embed_options=embed_options, noise=noise,
            c6=c6, tau=tau, dt=dt, qpu_mode=qpu_mode,
        )
        hist = run_analog(job.payload, coherent_runs=coherent_runs)
        return TrainResult(hist, backend, job=job)
    raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def make_solver(backend: str, **options):
    """Solver callable (QuboMatrix -> ShotHistogram) for meta-training."""

    def solver(qtilde: QuboMatrix) -> ShotHistogram:
        return train_qubo(qtilde, backend, **options).histogram

    return solver

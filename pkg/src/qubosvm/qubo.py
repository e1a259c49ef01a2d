"""QUBO data model, energy evaluation, and classical solver oracles.

A QUBO instance is a square real matrix Q; the cost of a binary assignment
``a`` is ``E = a^T Q a``.  Two classical solvers are provided: exhaustive
enumeration (exact, small instances) and single-bit-flip Metropolis
annealing (heuristic fallback).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ENUMERATION_LIMIT = 24

Bitstring = tuple[int, ...]


def _as_bits(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ValueError(f"bitstring must be one-dimensional, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("bitstring entries must be 0 or 1")
    return arr.astype(np.float64)


@dataclass
class QuboMatrix:
    """Square real cost matrix; minimized over binary vectors."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"QUBO matrix must be square, got shape {self.entries.shape}")
        if self.entries.shape[0] < 1:
            raise ValueError("QUBO dimension must be >= 1")
        if not np.isfinite(self.entries).all():
            raise ValueError("QUBO entries must be finite")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": self.entries.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "QuboMatrix":
        q = cls(np.asarray(obj["entries"], dtype=np.float64))
        if q.dim != int(obj["dim"]):
            raise ValueError("declared dim does not match entries")
        return q

    def to_text(self) -> str:
        rows = [" ".join(repr(float(v)) for v in row) for row in self.entries]
        return "\n".join([str(self.dim)] + rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuboMatrix":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        dim = int(lines[0])
        if len(lines) != dim + 1:
            raise ValueError(f"expected {dim} rows, got {len(lines) - 1}")
        entries = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
        q = cls(entries)
        if q.dim != dim:
            raise ValueError("row length does not match declared dimension")
        return q


def save_qubo(q: QuboMatrix, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(q.to_json()))
    else:
        path.write_text(q.to_text())


def load_qubo(path: str | Path) -> QuboMatrix:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return QuboMatrix.from_json(json.loads(text))
    return QuboMatrix.from_text(text)


def energy(q: QuboMatrix, a) -> float:
    """Quadratic cost a^T Q a of a binary assignment, in double precision."""
    bits = _as_bits(a)
    if bits.shape[0] != q.dim:
        raise ValueError(f"bitstring length {bits.shape[0]} != QUBO dim {q.dim}")
    return float(bits @ q.entries @ bits)


def symmetrize(q: QuboMatrix) -> QuboMatrix:
    """Replace off-diagonal entries by their pairwise mean; energies unchanged."""
    m = 0.5 * (q.entries + q.entries.T)
    np.fill_diagonal(m, np.diag(q.entries))
    return QuboMatrix(m)


@dataclass
class SolveResult:
    """Best assignment found by a solver, with its re-evaluated energy."""

    best: Bitstring
    energy: float
    ranked: list[tuple[Bitstring, float]] | None = None


@dataclass
class AnnealSchedule:
    """Geometric temperature decay for the Metropolis annealer.

    ``t_start=None`` resolves to ``max|Q_ij| * dim``, a scale-aware default.
    """

    t_start: float | None = None
    t_end: float = 1e-3


def _index_bits(indices: np.ndarray, dim: int) -> np.ndarray:
    """Bit matrix for state indices; bit i of the string is index bit dim-1-i."""
    shifts = dim - 1 - np.arange(dim)
    return ((indices[:, None] >> shifts) & 1).astype(np.float64)


def brute_force_solve(q: QuboMatrix, top_k: int = 1, limit: int = ENUMERATION_LIMIT) -> SolveResult:
    """Enumerate all 2^dim assignments; exact minimizer with deterministic ties.

    Equal energies are broken toward the lexicographically smallest bitstring.
    Refuses dimensions above ``limit`` (enumeration cost doubles per variable).
    """
    if q.dim > limit:
        raise ValueError(f"QUBO dim {q.dim} exceeds enumeration limit {limit}")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    top_k = min(top_k, 2 ** q.dim)

    chunk = 1 << min(q.dim, 16)
    total = 1 << q.dim
    cand_idx: np.ndarray | None = None
    cand_e: np.ndarray | None = None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = _index_bits(idx, q.dim)
        e = np.einsum("bi,ij,bj->b", bits, q.entries, bits)
        if cand_idx is None:
            cand_idx, cand_e = idx, e
        else:
            cand_idx = np.concatenate([cand_idx, idx])
            cand_e = np.concatenate([cand_e, e])
        if cand_idx.shape[0] > 4 * top_k:
            keep = np.argsort(cand_e, kind="stable")[: max(top_k, 1)]
            keep = np.sort(keep)  # preserve index order for lexicographic ties
            cand_idx, cand_e = cand_idx[keep], cand_e[keep]

    order = np.argsort(cand_e, kind="stable")[:top_k]
    ranked = []
    for i in order:
        bits = tuple(int(b) for b in _index_bits(np.array([cand_idx[i]]), q.dim)[0])
        ranked.append((bits, float(energy(q, bits))))
    best, best_e = ranked[0]
    return SolveResult(best=best, energy=best_e, ranked=ranked)


def simulated_anneal(
    q: QuboMatrix,
    sweeps: int = 1000,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
) -> SolveResult:
    """Single-bit-flip Metropolis annealing; deterministic for a fixed seed.

    Returns the best state visited.  May be non-optimal; pair with
    :func:`brute_force_solve` when an exact answer is required.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    schedule = schedule or AnnealSchedule()
    rng = np.random.default_rng(seed)
    dim = q.dim
    qm = q.entries
    t0 = schedule.t_start
    if t0 is None:
        t0 = max(float(np.abs(qm).max()) * dim, 1e-9)
    t1 = max(schedule.t_end, 1e-12)

    x = rng.integers(0, 2, size=dim).astype(np.float64)
    qx = qm @ x
    e = float(x @ qx)
    best_x, best_e = x.copy(), e
    n_steps = sweeps * dim
    step = 0
    for sweep in range(sweeps):
        temp = t0 * (t1 / t0) ** (sweep / max(1, sweeps - 1))
        for i in rng.permutation(dim):
            # flip delta for symmetric or general Q: dE = s*((Q+Q^T)x)_i + Q_ii
            s = 1.0 - 2.0 * x[i]
            de = s * (qx[i] + qm[:, i] @ x) + qm[i, i]
            if de <= 0.0 or rng.random() < np.exp(-de / temp):
                x[i] += s
                qx += s * qm[:, i]
                e += de
                if e < best_e - 1e-15:
                    best_e, best_x = e, x.copy()
            step += 1
    best = tuple(int(b) for b in best_x)
    return SolveResult(best=best, energy=float(energy(q, best)), ranked=None)

"""Placement of atoms so pairwise Rydberg interactions approximate a QUBO.

Couplings follow the van-der-Waals law U_ij = C6 / r_ij^6, so only positive
QUBO off-diagonals are reachable; negative targets are clipped to zero in
the loss.  Placement runs a derivative-free local optimizer (COBYLA) on a
penalized objective from several seeded feasible starts, then projects the
best result back into the feasible set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .qubo import QuboMatrix

# Rydberg C6 coefficient, rad * um^6 / us; a published value for the
# hardware family simulated here.  Configurable everywhere it is used.
DEFAULT_C6 = 5_420_158.53


@dataclass
class Register:
    """2-D atom coordinates in micrometers."""

    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
        if self.coords.shape[1] != 2:
            raise ValueError("register coordinates must be (n, 2)")

    @property
    def n_atoms(self) -> int:
        return self.coords.shape[0]

    def pair_distances(self) -> np.ndarray:
        return np.linalg.norm(self.coords[:, None] - self.coords[None], axis=-1)

    def to_json(self) -> dict:
        return {"coords_um": self.coords.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Register":
        return cls(np.asarray(obj["coords_um"], dtype=np.float64))


def save_register(reg: Register, path: str | Path) -> None:
    Path(path).write_text(json.dumps(reg.to_json()))


def load_register(path: str | Path) -> Register:
    return Register.from_json(json.loads(Path(path).read_text()))


@dataclass
class HardwareConstraints:
    """Geometric limits of the trap: atom count, spacing, extent, lattice."""

    max_atoms: int = 25
    min_distance: float = 5.0
    max_radius: float = 35.0
    lattice: str = "none"
    lattice_pitch: float = 5.0

    def __post_init__(self):
        if self.min_distance <= 0:
            raise ValueError("min_distance must be positive")
        if self.max_radius <= self.min_distance:
            raise ValueError("max_radius must exceed min_distance")
        if self.lattice not in ("none", "triangular"):
            raise ValueError(f"unknown lattice: {self.lattice!r}")

    def to_json(self) -> dict:
        return {
            "max_atoms": self.max_atoms,
            "min_distance": self.min_distance,
            "max_radius": self.max_radius,
            "lattice": self.lattice,
            "lattice_pitch": self.lattice_pitch,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HardwareConstraints":
        return cls(**obj)


@dataclass
class Violation:
    constraint: str
    atoms: tuple[int, ...]
    detail: str


@dataclass
class EmbeddingReport:
    register: Register
    loss: float
    target: QuboMatrix
    achieved: np.ndarray
    iterations: int

    def to_json(self) -> dict:
        return {
            "register": self.register.to_json(),
            "loss": self.loss,
            "target": self.target.to_json(),
            "achieved": self.achieved.tolist(),
            "iterations": self.iterations,
        }


@dataclass
class EmbedOptions:
    """Optimizer settings for :func:`embed`."""

    restarts: int = 8
    maxiter: int = 4000
    rhobeg: float = 2.0
    penalty: float = 100.0
    scale: float = 1.0  # global factor applied to the target off-diagonals


def interaction_matrix(reg: Register, c6: float = DEFAULT_C6) -> np.ndarray:
    """Pairwise couplings U_ij = c6 / r_ij^6 (rad/us), zero diagonal."""
    d = reg.pair_distances()
    off = ~np.eye(reg.n_atoms, dtype=bool)
    if (d[off] == 0).any():
        i, j = np.argwhere((d == 0) & off)[0]
        raise ValueError(f"atoms {i} and {j} are coincident")
    u = np.zeros_like(d)
    u[off] = c6 / d[off] ** 6
    return u


def _target_couplings(target: QuboMatrix, scale: float) -> np.ndarray:
    sym = 0.5 * (target.entries + target.entries.T)
    t = np.clip(scale * sym, 0.0, None)
    np.fill_diagonal(t, 0.0)
    return t


def embedding_loss(reg: Register, target: QuboMatrix, c6: float = DEFAULT_C6,
                   scale: float = 1.0) -> float:
    """Sum of squared mismatches between couplings and clipped targets."""
    if reg.n_atoms != target.dim:
        raise ValueError(f"register size {reg.n_atoms} != target dim {target.dim}")
    u = interaction_matrix(reg, c6)
    t = _target_couplings(target, scale)
    iu = np.triu_indices(reg.n_atoms, 1)
    return float(((u[iu] - t[iu]) ** 2).sum())


def validate_register(reg: Register, constraints: HardwareConstraints) -> list[Violation]:
    """All constraint violations; empty list means the register is feasible."""
    out: list[Violation] = []
    n = reg.n_atoms
    if n > constraints.max_atoms:
        out.append(Violation("max_atoms", tuple(range(n)),
                             f"{n} atoms exceed limit {constraints.max_atoms}"))
    d = reg.pair_distances()
    for i in range(n):
        for j in range(i + 1, n):
            if d[i, j] < constraints.min_distance - 1e-9:
                out.append(Violation("min_distance", (i, j),
                                     f"atoms {i},{j} at {d[i, j]:.3f} um < "
                                     f"{constraints.min_distance} um"))
    center = reg.coords.mean(axis=0)
    radii = np.linalg.norm(reg.coords - center, axis=1)
    for i in range(n):
        if radii[i] > constraints.max_radius + 1e-9:
            out.append(Violation("max_radius", (i,),
                                 f"atom {i} at {radii[i]:.3f} um from centroid > "
                                 f"{constraints.max_radius} um"))
    if constraints.lattice == "triangular":
        for i, p in enumerate(reg.coords):
            node = _nearest_lattice_points(p, constraints.lattice_pitch, 1)[0]
            if np.linalg.norm(p - node) > 1e-6 * constraints.lattice_pitch:
                out.append(Violation("lattice", (i,),
                                     f"atom {i} off the triangular grid"))
    return out


def _lattice_point(i: int, j: int, pitch: float) -> np.ndarray:
    return pitch * np.array([i + 0.5 * j, j * np.sqrt(3.0) / 2.0])


def _nearest_lattice_points(p: np.ndarray, pitch: float, count: int) -> list[np.ndarray]:
    """Lattice nodes around p sorted by distance, ties toward smaller (i, j)."""
    # invert the oblique basis, then scan the surrounding cells
    j0 = p[1] / (pitch * np.sqrt(3.0) / 2.0)
    i0 = p[0] / pitch - 0.5 * j0
    span = 2 + count
    cands = []
    for j in range(int(np.floor(j0)) - span, int(np.ceil(j0)) + span + 1):
        for i in range(int(np.floor(i0)) - span, int(np.ceil(i0)) + span + 1):
            node = _lattice_point(i, j, pitch)
            cands.append((float(np.linalg.norm(p - node)), (i, j), node))
    cands.sort(key=lambda c: (round(c[0], 9), c[1]))
    return [c[2] for c in cands[:count]]


def snap_to_lattice(reg: Register, pitch: float) -> Register:
    """Move each atom to its nearest triangular-lattice node.

    Collisions are resolved in register order: a later atom landing on an
    occupied node moves to its next-nearest free node.
    """
    taken: set[tuple[float, float]] = set()
    out = []
    for p in reg.coords:
        k = 1
        while True:
            nodes = _nearest_lattice_points(p, pitch, k)
            node = nodes[-1]
            key = (round(node[0], 9), round(node[1], 9))
            if key not in taken:
                taken.add(key)
                out.append(node)
                break
            k += 1
    return Register(np.array(out))


def _mds_start(t: np.ndarray, constraints: HardwareConstraints, c6: float) -> np.ndarray:
    """Initial geometry from the target couplings via classical MDS.

    Positive targets imply pair distances r = (c6/t)^(1/6); pairs without a
    coupling are pushed to a far-but-finite distance.  For targets that are
    exactly realizable this start recovers the geometry up to isometry.
    """
    n = t.shape[0]
    if n == 1:
        return np.zeros((1, 2))
    dist = np.zeros_like(t)
    pos = t > 0
    dist[pos] = (c6 / t[pos]) ** (1.0 / 6.0)
    known_max = dist.max() if pos.any() else constraints.min_distance * 2.0
    far = min(1.5 * known_max + constraints.min_distance, 2.0 * constraints.max_radius)
    off = ~np.eye(n, dtype=bool)
    dist[off & ~pos] = far
    d2 = dist ** 2
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ d2 @ j
    w, v = np.linalg.eigh(b)
    top = np.argsort(w)[::-1][:2]
    coords = v[:, top] * np.sqrt(np.clip(w[top], 0.0, None))
    if coords.shape[1] < 2:
        coords = np.column_stack([coords, np.zeros(n)])
    return coords - coords.mean(axis=0)


def _feasible_start(rng: np.random.Generator, n: int,
                    constraints: HardwareConstraints) -> np.ndarray:
    """Random points in a disk with spacing margin; lattice fallback if tight."""
    radius = min(constraints.max_radius * 0.85,
                 constraints.min_distance * max(1.0, np.sqrt(n)) * 1.6)
    for _ in range(400):
        pts: list[np.ndarray] = []
        tries = 0
        while len(pts) < n and tries < 4000:
            r = radius * np.sqrt(rng.random())
            phi = rng.uniform(0, 2 * np.pi)
            p = np.array([r * np.cos(phi), r * np.sin(phi)])
            if all(np.linalg.norm(p - q) >= constraints.min_distance * 1.15 for q in pts):
                pts.append(p)
            tries += 1
        if len(pts) == n:
            return np.array(pts)
        radius *= 1.1
        if radius > constraints.max_radius:
            break
    # deterministic fallback: triangular grid at min spacing
    side = int(np.ceil(np.sqrt(n)))
    pts = [_lattice_point(i, j, constraints.min_distance * 1.2)
           for j in range(side) for i in range(side)][:n]
    arr = np.array(pts)
    return arr - arr.mean(axis=0)


def _project_feasible(coords: np.ndarray, constraints: HardwareConstraints,
                      max_rounds: int = 200) -> np.ndarray:
    """Push apart too-close pairs and pull outliers inside the radius."""
    c = coords.copy()
    for _ in range(max_rounds):
        moved = False
        d = np.linalg.norm(c[:, None] - c[None], axis=-1)
        n = c.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if d[i, j] < constraints.min_distance:
                    gap = constraints.min_distance - d[i, j]
                    if d[i, j] < 1e-9:
                        direction = np.array([1.0, 0.0])
                    else:
                        direction = (c[j] - c[i]) / d[i, j]
                    c[i] -= 0.5 * (gap + 1e-6) * direction
                    c[j] += 0.5 * (gap + 1e-6) * direction
                    moved = True
        center = c.mean(axis=0)
        radii = np.linalg.norm(c - center, axis=1)
        over = radii > constraints.max_radius
        if over.any():
            scale = (constraints.max_radius - 1e-6) / radii[over]
            c[over] = center + (c[over] - center) * scale[:, None]
            moved = True
        if not moved:
            return c
    return c


def embed(
    target: QuboMatrix,
    constraints: HardwareConstraints | None = None,
    options: EmbedOptions | None = None,
    seed: int = 0,
    c6: float = DEFAULT_C6,
) -> EmbeddingReport:
    """Place target.dim atoms so couplings track the QUBO off-diagonals.

    Runs COBYLA on the loss plus quadratic exterior penalties from
    ``options.restarts`` seeded feasible starts, keeps the best feasible
    candidate (after projection), and re-evaluates the reported loss.
    Deterministic for a fixed seed.
    """
    constraints = constraints or HardwareConstraints()
    options = options or EmbedOptions()
    n = target.dim
    if n > constraints.max_atoms:
        raise ValueError(f"target dim {n} exceeds max atoms {constraints.max_atoms}")

    t = _target_couplings(target, options.scale)
    iu = np.triu_indices(n, 1)
    t_flat = t[iu]
    penalty = options.penalty * max(1.0, float(t_flat.max()) ** 2 if t_flat.size else 1.0)

    def objective(x: np.ndarray) -> float:
        coords = x.reshape(n, 2)
        d = np.linalg.norm(coords[:, None] - coords[None], axis=-1)
        dm = np.maximum(d[iu], 1e-6)
        u = c6 / dm ** 6
        loss = ((u - t_flat) ** 2).sum()
        loss += penalty * (np.clip(constraints.min_distance - dm, 0, None) ** 2).sum()
        radii = np.linalg.norm(coords - coords.mean(axis=0), axis=1)
        loss += penalty * (np.clip(radii - constraints.max_radius, 0, None) ** 2).sum()
        return float(loss)

    seeds = np.random.SeedSequence(seed).spawn(options.restarts)
    best: tuple[float, int, np.ndarray, int] | None = None
    for r, ss in enumerate(seeds):
        if r == 0:
            # geometry reconstructed from the targets; exact when realizable
            x0 = _project_feasible(_mds_start(t, constraints, c6), constraints)
        else:
            rng = np.random.default_rng(ss)
            x0 = _feasible_start(rng, n, constraints)
        if n == 1:
            candidates, iters = [x0], 0
        else:
            res = minimize(
                objective,
                x0.ravel(),
                method="COBYLA",
                options={"maxiter": options.maxiter, "rhobeg": options.rhobeg,
                         "tol": 1e-10},
            )
            # keep the start as a fallback: projection may undo a descent
            candidates, iters = [res.x.reshape(n, 2), x0], int(res.nfev)
        for candidate in candidates:
            candidate = _project_feasible(candidate, constraints)
            if constraints.lattice == "triangular":
                candidate = snap_to_lattice(
                    Register(candidate), constraints.lattice_pitch
                ).coords
            reg = Register(candidate)
            if validate_register(reg, constraints):
                continue
            loss = embedding_loss(reg, target, c6, options.scale)
            if best is None or loss < best[0] - 1e-15:
                best = (loss, r, candidate, iters)
    if best is None:
        raise RuntimeError(
            f"no feasible register found after {options.restarts} restarts"
        )
    loss, _, coords, iters = best
    reg = Register(coords)
    return EmbeddingReport(
        register=reg,
        loss=loss,
        target=target,
        achieved=interaction_matrix(reg, c6),
        iterations=iters,
    )

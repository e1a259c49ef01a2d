import numpy as np
import pytest

from qubosvm.embedding import (
    DEFAULT_C6,
    EmbedOptions,
    HardwareConstraints,
    Register,
    embed,
    embedding_loss,
    interaction_matrix,
    load_register,
    save_register,
    snap_to_lattice,
    validate_register,
)
from qubosvm.qubo import QuboMatrix


def pair_target(t):
    return QuboMatrix(np.array([[0.0, t], [t, 0.0]]))


class TestInteractionMatrix:
    def test_sixth_power_law(self):
        u1 = interaction_matrix(Register([[0, 0], [8, 0]]))
        u2 = interaction_matrix(Register([[0, 0], [16, 0]]))
        assert u1[0, 1] / u2[0, 1] == pytest.approx(64.0)

    def test_unit_case(self):
        u = interaction_matrix(Register([[0, 0], [1, 0]]), c6=1.0)
        assert u[0, 1] == pytest.approx(1.0)
        assert u[0, 0] == 0.0

    def test_equilateral_triangle(self):
        h = np.sqrt(3) / 2 * 10
        reg = Register([[0, 0], [10, 0], [5, h]])
        u = interaction_matrix(reg)
        assert u[0, 1] == pytest.approx(u[0, 2])
        assert u[0, 1] == pytest.approx(u[1, 2])

    def test_coincident_atoms(self):
        with pytest.raises(ValueError, match="coincident"):
            interaction_matrix(Register([[1, 1], [1, 1]]))

    def test_scaling_coordinates(self):
        rng = np.random.default_rng(0)
        coords = rng.uniform(-10, 10, (4, 2))
        u1 = interaction_matrix(Register(coords))
        u2 = interaction_matrix(Register(coords * 2.0))
        assert np.allclose(u2, u1 / 64.0)


class TestEmbeddingLoss:
    def test_decays_with_distance_for_zero_target(self):
        target = QuboMatrix(np.zeros((2, 2)))
        near = embedding_loss(Register([[0, 0], [6, 0]]), target)
        far = embedding_loss(Register([[0, 0], [30, 0]]), target)
        assert far < near
        assert far < 1e-3

    def test_closed_form_pair_distance(self):
        t = 2.5
        r_star = (DEFAULT_C6 / t) ** (1 / 6)
        loss = embedding_loss(Register([[0, 0], [r_star, 0]]), pair_target(t))
        assert loss == pytest.approx(0.0, abs=1e-18)

    def test_negative_target_clipped(self):
        reg = Register([[0, 0], [10, 0]])
        u = interaction_matrix(reg)[0, 1]
        loss = embedding_loss(reg, pair_target(-3.0))
        assert loss == pytest.approx(u**2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="size"):
            embedding_loss(Register([[0, 0], [9, 0]]), QuboMatrix(np.zeros((3, 3))))


class TestValidate:
    def test_min_distance_violation(self):
        v = validate_register(Register([[0, 0], [4, 0]]), HardwareConstraints())
        assert len(v) == 1
        assert v[0].constraint == "min_distance"
        assert v[0].atoms == (0, 1)

    def test_radius_violation(self):
        # centroid at origin, one atom at 36 um
        v = validate_register(
            Register([[36, 0], [-36, 0]]), HardwareConstraints(max_radius=35.0)
        )
        assert {x.constraint for x in v} == {"max_radius"}
        assert len(v) == 2

    def test_compliant_register_from_embed(self):
        rng = np.random.default_rng(7)
        m = np.abs(rng.uniform(0.5, 3.0, (12, 12)))
        target = QuboMatrix(0.5 * (m + m.T))
        report = embed(target, seed=1, options=EmbedOptions(restarts=2, maxiter=800))
        assert validate_register(report.register, HardwareConstraints()) == []

    def test_max_atoms(self):
        coords = np.array([[7.0 * i, 0.0] for i in range(3)])
        v = validate_register(Register(coords), HardwareConstraints(max_atoms=2))
        assert v[0].constraint == "max_atoms"


class TestSnapToLattice:
    def test_on_node_unchanged(self):
        pitch = 6.0
        node = pitch * np.array([2 + 0.5 * 1, np.sqrt(3) / 2])
        snapped = snap_to_lattice(Register([node, [0, 0]]), pitch)
        assert np.allclose(snapped.coords[0], node)
        assert np.allclose(snapped.coords[1], [0, 0])

    def test_midpoint_tie_is_deterministic(self):
        pitch = 6.0
        mid = np.array([pitch / 2, 0.0])  # equidistant from nodes (0,0) and (1,0)
        s1 = snap_to_lattice(Register([mid, [30, 30]]), pitch)
        s2 = snap_to_lattice(Register([mid.copy(), [30, 30]]), pitch)
        assert np.allclose(s1.coords, s2.coords)
        assert np.allclose(s1.coords[0], [0.0, 0.0])  # smaller (i, j) wins

    def test_collision_resolved(self):
        pitch = 6.0
        snapped = snap_to_lattice(Register([[0.1, 0.0], [-0.1, 0.0]]), pitch)
        assert not np.allclose(snapped.coords[0], snapped.coords[1])
        d = np.linalg.norm(snapped.coords[0] - snapped.coords[1])
        assert d == pytest.approx(pitch)


class TestEmbed:
    def test_two_atom_pair_within_5_percent(self):
        t = 3.0
        report = embed(pair_target(t), seed=0)
        u = report.achieved[0, 1]
        assert abs(u - t) / t < 0.05

    def test_refuses_too_many_atoms(self):
        with pytest.raises(ValueError, match="max atoms"):
            embed(QuboMatrix(np.zeros((26, 26))), HardwareConstraints())

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        m = np.abs(rng.uniform(0, 2, (4, 4)))
        target = QuboMatrix(0.5 * (m + m.T))
        r1 = embed(target, seed=11, options=EmbedOptions(restarts=3, maxiter=600))
        r2 = embed(target, seed=11, options=EmbedOptions(restarts=3, maxiter=600))
        assert np.array_equal(r1.register.coords, r2.register.coords)
        assert r1.loss == r2.loss

    def test_loss_reevaluated(self):
        rng = np.random.default_rng(4)
        m = np.abs(rng.uniform(0, 2, (3, 3)))
        target = QuboMatrix(0.5 * (m + m.T))
        report = embed(target, seed=5, options=EmbedOptions(restarts=2, maxiter=500))
        assert report.loss == pytest.approx(embedding_loss(report.register, target))

    def test_improves_on_far_apart_start(self):
        # a register spread to the feasibility edge is a poor fit for a
        # strong-coupling pair; embed should do much better
        t = 10.0
        report = embed(pair_target(t), seed=2)
        spread = Register([[-30, 0], [30, 0]])
        assert report.loss < embedding_loss(spread, pair_target(t))

    def test_lattice_mode_snaps(self):
        rng = np.random.default_rng(9)
        m = np.abs(rng.uniform(0.5, 2, (3, 3)))
        target = QuboMatrix(0.5 * (m + m.T))
        constraints = HardwareConstraints(lattice="triangular", lattice_pitch=6.0)
        report = embed(target, constraints, EmbedOptions(restarts=2, maxiter=400), seed=3)
        assert validate_register(report.register, constraints) == []

    def test_global_scale_option(self):
        t = 2.0
        report = embed(pair_target(t), options=EmbedOptions(scale=2.0), seed=1)
        assert report.achieved[0, 1] == pytest.approx(2 * t, rel=0.05)


class TestRegisterSerialization:
    def test_roundtrip(self, tmp_path):
        reg = Register([[1.5, -2.0], [8.0, 3.25]])
        path = tmp_path / "register.json"
        save_register(reg, path)
        loaded = load_register(path)
        assert np.array_equal(loaded.coords, reg.coords)
        assert "coords_um" in path.read_text()

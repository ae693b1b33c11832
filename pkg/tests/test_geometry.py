"""
Tests for the internal-coordinate geometry kernel.
"""
import numpy as np
import pytest

from utils.errors import DegenerateGeometryError
from zmatrix.geometry import (
    bond_angle,
    bond_angles,
    dihedral,
    dihedrals,
    place_atom,
    place_atoms,
    place_atoms_jvp,
    rotate,
)


def projected_dihedral(a, b, c, d):
    """Dihedral from projections onto the plane normal to B->C."""
    b0 = a - b
    b1 = (c - b) / np.linalg.norm(c - b)
    b2 = d - c
    v = b0 - np.dot(b0, b1) * b1
    w = b2 - np.dot(b2, b1) * b1
    return np.arctan2(np.dot(np.cross(b1, v), w), np.dot(v, w))


class TestDihedral:
    """Dihedral sign convention and range."""

    def test_plus_ninety(self):
        a, b, c, d = np.array([[0.0, 1, 0], [0, 0, 0], [1, 0, 0], [1, 0, 1]])
        assert dihedral(a, b, c, d) == pytest.approx(np.pi / 2)

    def test_minus_ninety(self):
        a, b, c, d = np.array([[0.0, 1, 0], [0, 0, 0], [1, 0, 0], [1, 0, -1]])
        assert dihedral(a, b, c, d) == pytest.approx(-np.pi / 2)

    def test_trans_is_plus_pi(self):
        a, b, c, d = np.array([[0.0, 1, 0], [0, 0, 0], [1, 0, 0], [1, -1, 0]])
        assert dihedral(a, b, c, d) == pytest.approx(np.pi)

    def test_cis_is_zero(self):
        a, b, c, d = np.array([[0.0, 1, 0], [0, 0, 0], [1, 0, 0], [1, 1, 0]])
        assert dihedral(a, b, c, d) == pytest.approx(0.0, abs=1e-12)

    def test_matches_projection_formula(self):
        rng = np.random.default_rng(7)
        points = rng.normal(size=(200, 4, 3))
        got = dihedrals(points[:, 0], points[:, 1], points[:, 2], points[:, 3])
        expected = [projected_dihedral(*p) for p in points]
        np.testing.assert_allclose(got, expected, atol=1e-10)
        assert np.all(got > -np.pi) and np.all(got <= np.pi)

    def test_collinear_anchors_raise_with_row(self):
        rng = np.random.default_rng(1)
        points = rng.normal(size=(4, 4, 3))
        points[2, 0] = points[2, 1] + 2.0 * (points[2, 2] - points[2, 1])
        with pytest.raises(DegenerateGeometryError) as info:
            dihedrals(points[:, 0], points[:, 1], points[:, 2], points[:, 3])
        assert info.value.index == 2


def test_bond_angle_right_angle():
    assert bond_angle([1.0, 0, 0], [0, 0, 0], [0, 2.0, 0]) == pytest.approx(np.pi / 2)
    assert bond_angle([1.0, 0, 0], [0, 0, 0], [-3.0, 0, 0]) == pytest.approx(np.pi)


def test_rotate_preserves_length():
    rng = np.random.default_rng(3)
    v = rng.normal(size=(10, 3))
    axis = rng.normal(size=(10, 3))
    axis /= np.linalg.norm(axis, axis=1)[:, None]
    out = rotate(v, axis, rng.uniform(-np.pi, np.pi, 10))
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), np.linalg.norm(v, axis=1))


class TestPlacement:
    """Placing atoms from anchors and internal coordinates."""

    def test_place_then_measure(self):
        rng = np.random.default_rng(11)
        m = 10_000
        b, c, d = rng.normal(size=(3, m, 3))
        length = rng.uniform(1.0, 2.0, m)
        theta = rng.uniform(0.3, np.pi - 0.3, m)
        tau = rng.uniform(-np.pi, np.pi, m)

        a = place_atoms(b, c, d, length, theta, tau)

        np.testing.assert_allclose(np.linalg.norm(a - b, axis=1), length, atol=1e-10)
        np.testing.assert_allclose(bond_angles(a, b, c), theta, atol=1e-9)
        np.testing.assert_allclose(np.cos(dihedrals(a, b, c, d) - tau), 1.0, atol=1e-9)

    def test_single_atom(self):
        b, c, d = np.array([[0.0, 0, 0], [1.5, 0, 0], [2.0, 1.4, 0]])
        a = place_atom(b, c, d, 1.33, np.deg2rad(120.0), np.deg2rad(-60.0))
        assert np.linalg.norm(a - b) == pytest.approx(1.33)
        assert dihedral(a, b, c, d) == pytest.approx(np.deg2rad(-60.0))

    def test_collinear_anchors(self):
        b, c, d = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
        with pytest.raises(DegenerateGeometryError):
            place_atom(b, c, d, 1.0, 1.0, 1.0)

    def test_jvp_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        m = 20
        b, c, d = rng.normal(size=(3, m, 3))
        length = rng.uniform(1.0, 2.0, m)
        theta = rng.uniform(0.5, 2.5, m)
        tau = rng.uniform(-3.0, 3.0, m)
        db, dc, dd = rng.normal(size=(3, m, 1, 3))
        dl, dt, dtau = rng.normal(size=(3, m, 1))

        _, tangent = place_atoms_jvp(b, c, d, db, dc, dd, length, theta, tau, dl, dt, dtau)

        h = 1e-6

        def shifted(sign):
            return place_atoms(
                b + sign * h * db[:, 0],
                c + sign * h * dc[:, 0],
                d + sign * h * dd[:, 0],
                length + sign * h * dl[:, 0],
                theta + sign * h * dt[:, 0],
                tau + sign * h * dtau[:, 0],
            )

        numeric = (shifted(1.0) - shifted(-1.0)) / (2 * h)
        np.testing.assert_allclose(tangent[:, 0], numeric, atol=1e-6)

    def test_jvp_internal_coordinate_directions(self):
        rng = np.random.default_rng(6)
        m = 50
        b, c, d = rng.normal(size=(3, m, 3))
        length = rng.uniform(1.0, 2.0, m)
        theta = rng.uniform(0.3, np.pi - 0.3, m)
        tau = rng.uniform(-np.pi, np.pi, m)
        zero_anchor = np.zeros((m, 3, 3))
        unit = np.broadcast_to(np.eye(3), (m, 3, 3))

        _, tangent = place_atoms_jvp(
            b, c, d, zero_anchor, zero_anchor, zero_anchor, length, theta, tau, unit[:, 0], unit[:, 1], unit[:, 2]
        )
        d_length, d_theta, d_tau = tangent[:, 0], tangent[:, 1], tangent[:, 2]

        np.testing.assert_allclose(np.linalg.norm(d_length, axis=1), 1.0, atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(d_theta, axis=1), length, atol=1e-10)
        axis = (c - b) / np.linalg.norm(c - b, axis=1)[:, None]
        np.testing.assert_allclose(np.sum(d_tau * axis, axis=1), 0.0, atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(d_tau, axis=1), length * np.sin(theta), atol=1e-10)

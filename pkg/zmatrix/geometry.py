"""
Internal-coordinate geometry.

Dihedrals follow the IUPAC convention: positive when, looking along B->C, the
A->B bond must turn clockwise to eclipse C->D. All angles are radians.

The *_jvp variants push tangent vectors through the same computations
(forward-mode differentiation). Tangents carry a trailing parameter axis K:
points have shape (m, K, 3), scalars (m, K).
"""
import numpy as np

from utils.errors import DegenerateGeometryError

DEGENERACY_TOL = 1e-8


def _rows(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


def _first_degenerate(cross: np.ndarray, u: np.ndarray, v: np.ndarray):
    bad = _norm(cross) <= DEGENERACY_TOL * _norm(u) * _norm(v)
    bad |= _norm(u) == 0.0
    bad |= _norm(v) == 0.0
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def dihedrals(a, b, c, d) -> np.ndarray:
    """Vectorised dihedral of rows A-B-C-D, in (-pi, pi]."""
    a, b, c, d = _rows(a), _rows(b), _rows(c), _rows(d)
    b1, b2, b3 = b - a, c - b, d - c
    n1 = np.cross(b1, b2)
    n2 = np.cross(b2, b3)
    for cross, u, v in ((n1, b1, b2), (n2, b2, b3)):
        index = _first_degenerate(cross, u, v)
        if index is not None:
            raise DegenerateGeometryError(f"collinear atoms in dihedral (row {index})", index=index)
    y = _norm(b2) * np.sum(b1 * n2, axis=-1)
    x = np.sum(n1 * n2, axis=-1)
    tau = np.arctan2(y, x)
    return np.where(tau <= -np.pi, np.pi, tau)


def dihedral(a, b, c, d) -> float:
    return float(dihedrals(a, b, c, d)[0])


def bond_angles(a, b, c) -> np.ndarray:
    """Vectorised angle A-B-C at B, in [0, pi]."""
    a, b, c = _rows(a), _rows(b), _rows(c)
    u, v = a - b, c - b
    return np.arctan2(_norm(np.cross(u, v)), np.sum(u * v, axis=-1))


def bond_angle(a, b, c) -> float:
    return float(bond_angles(a, b, c)[0])


def rotate(v: np.ndarray, axis: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Rodrigues rotation of rows v about unit rows axis by angle (right-hand rule)."""
    c = np.cos(angle)[:, None]
    s = np.sin(angle)[:, None]
    kv = np.sum(axis * v, axis=-1)[:, None]
    return v * c + np.cross(axis, v) * s + axis * kv * (1.0 - c)


def place_atoms(b, c, d, length, theta, tau) -> np.ndarray:
    """
    Place atoms A from anchors so that |A-B| = length, angle(A,B,C) = theta and
    dihedral(A,B,C,D) = tau.

    The unit vector B->C is scaled to the bond length, rotated by theta about
    the normal of the (B, C, D) plane, then by tau about the C->B axis.

    Raises:
        DegenerateGeometryError: B, C, D collinear or coincident
    """
    b, c, d = _rows(b), _rows(c), _rows(d)
    length, theta, tau = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (length, theta, tau))
    bc = c - b
    cd = d - c
    normal = np.cross(bc, cd)
    index = _first_degenerate(normal, bc, cd)
    if index is not None:
        raise DegenerateGeometryError(f"collinear anchors (row {index})", index=index)

    u = bc / _norm(bc)[:, None]
    n = normal / _norm(normal)[:, None]
    v = length[:, None] * u
    v = rotate(v, n, theta)
    v = rotate(v, -u, tau)
    return b + v


def place_atom(b, c, d, length: float, theta: float, tau: float) -> np.ndarray:
    return place_atoms(b, c, d, length, theta, tau)[0]


def _normalize_jvp(x, dx):
    n = _norm(x)[:, None]
    y = x / n
    dy = (dx - y[:, None, :] * np.einsum("mkc,mc->mk", dx, y)[..., None]) / n[:, :, None]
    return y, dy


def _cross_jvp(a, da, b, db):
    return np.cross(a, b), np.cross(da, b[:, None, :]) + np.cross(a[:, None, :], db)


def _rotate_jvp(v, dv, k, dk, phi, dphi):
    c = np.cos(phi)[:, None]
    s = np.sin(phi)[:, None]
    kv = np.sum(k * v, axis=-1)[:, None]
    dkv = np.einsum("mkc,mc->mk", dk, v) + np.einsum("mc,mkc->mk", k, dv)
    kxv, dkxv = _cross_jvp(k, dk, v, dv)

    out = v * c + kxv * s + k * kv * (1.0 - c)
    dout = (
        dv * c[:, :, None]
        - v[:, None, :] * (s * dphi)[:, :, None]
        + dkxv * s[:, :, None]
        + kxv[:, None, :] * (c * dphi)[:, :, None]
        + dk * (kv * (1.0 - c))[:, :, None]
        + k[:, None, :] * (dkv * (1.0 - c) + kv * s * dphi)[:, :, None]
    )
    return out, dout


def place_atoms_jvp(b, c, d, db, dc, dd, length, theta, tau, dlength, dtheta, dtau):
    """
    place_atoms together with its tangent.

    Args:
        b, c, d: Anchor rows (m, 3)
        db, dc, dd: Anchor tangents (m, K, 3)
        length, theta, tau: Internal coordinates (m,)
        dlength, dtheta, dtau: Their tangents (m, K)

    Returns:
        Positions (m, 3) and tangents (m, K, 3)
    """
    bc, dbc = c - b, dc - db
    cd, dcd = d - c, dd - dc
    normal, dnormal = _cross_jvp(bc, dbc, cd, dcd)
    index = _first_degenerate(normal, bc, cd)
    if index is not None:
        raise DegenerateGeometryError(f"collinear anchors (row {index})", index=index)

    u, du = _normalize_jvp(bc, dbc)
    n, dn = _normalize_jvp(normal, dnormal)
    v = length[:, None] * u
    dv = dlength[:, :, None] * u[:, None, :] + length[:, None, None] * du
    v, dv = _rotate_jvp(v, dv, n, dn, theta, dtheta)
    v, dv = _rotate_jvp(v, dv, -u, -du, tau, dtau)
    return b + v, db + dv

"""Internal coordinates: geometry kernel, Z-matrix frames and reconstruction."""
from .frame import ANGLE, BOND, TORSION, ResidueKey, ZMatrixFrame, ZRow, extract, read_zmatrix, write_zmatrix
from .geometry import bond_angle, bond_angles, dihedral, dihedrals, place_atom, place_atoms
from .reconstruct import (
    N_PARAMS,
    PlacementJacobian,
    PlacementPlan,
    placement_schedule,
    reconstruct_frame,
    reconstruct_with_jacobian,
)

__all__ = [
    "ANGLE",
    "BOND",
    "N_PARAMS",
    "TORSION",
    "PlacementJacobian",
    "PlacementPlan",
    "ResidueKey",
    "ZMatrixFrame",
    "ZRow",
    "bond_angle",
    "bond_angles",
    "dihedral",
    "dihedrals",
    "extract",
    "place_atom",
    "place_atoms",
    "placement_schedule",
    "read_zmatrix",
    "reconstruct_frame",
    "reconstruct_with_jacobian",
    "write_zmatrix",
]

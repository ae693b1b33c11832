"""
Batched Z-matrix to Cartesian reconstruction.

Atoms are placed in passes: N of every non-terminal residue at once, then C,
then O, then side-chain slots in template order. Coordinates live in a buffer
of shape (n_residues, 1 + MAX_PLACED, 3); column 0 holds CA, column 1 + s the
atom of placement slot s.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from structure_io.models import Atom, CGTrace, Residue, Structure
from templates import MAX_PLACED, ResidueType, template_for
from templates.residues import BACKBONE_ORDER
from utils.errors import DegenerateGeometryError, MissingRowsError, SkeletonMismatchError, TemplateLookupError
from zmatrix.frame import ANGLE, BOND, TORSION, ResidueKey, ZMatrixFrame
from zmatrix.geometry import place_atoms, place_atoms_jvp

logger = logging.getLogger(__name__)

O_SLOT = BACKBONE_ORDER.index("O")
N_SLOT = BACKBONE_ORDER.index("N")
C_SLOT = BACKBONE_ORDER.index("C")
N_PARAMS = 3 * MAX_PLACED  # internal coordinates per residue
OUTPUT_ORDER = ("N", "CA", "C", "O")


def placement_schedule(residue_types: Sequence[ResidueType]) -> List[int]:
    """Slots in execution order: N, C, O, then side-chain slots of the longest side chain."""
    longest = max((len(template_for(t).side_chain) for t in residue_types), default=0)
    return [N_SLOT, C_SLOT, O_SLOT] + list(range(len(BACKBONE_ORDER), len(BACKBONE_ORDER) + longest))


@dataclass
class PlacementJacobian:
    """
    d(coordinates)/d(internal coordinates), block-diagonal per residue.

    d_coords[r, s, p] is the derivative of the atom in slot s of row residue r
    with respect to parameter p = 3 * slot + {0: d, 1: theta, 2: tau} of the
    same residue. CA positions are fixed and have zero derivative.
    """

    keys: List[ResidueKey]
    mask: np.ndarray
    d_coords: np.ndarray

    def column(self, row: int, slot: int, component: int) -> np.ndarray:
        """Derivative of every placed atom with respect to one internal coordinate."""
        out = np.zeros((len(self.keys), MAX_PLACED, 3))
        out[row] = self.d_coords[row, :, 3 * slot + component]
        return out

    def pullback(self, grad_coords: np.ndarray) -> np.ndarray:
        """Chain a coordinate gradient (n, MAX_PLACED, 3) back to (d, theta, tau)."""
        grad = np.einsum("rskc,rsc->rk", self.d_coords, grad_coords)
        return grad.reshape(len(self.keys), MAX_PLACED, 3) * self.mask[:, :, None]


class PlacementPlan:
    """Anchor index tables for one trace, shared by every frame placed on it."""

    def __init__(self, trace: CGTrace):
        self.trace = trace
        self.positions = np.array([i for i in range(len(trace)) if not trace.terminal[i]], dtype=int)
        self.keys = [ResidueKey(trace.chain_ids[i], trace.seq_indices[i], trace.residue_types[i]) for i in self.positions]
        n = len(self.positions)
        self.mask = np.zeros((n, MAX_PLACED), dtype=bool)
        self.anchor_pos = np.zeros((n, MAX_PLACED, 3), dtype=int)
        self.anchor_col = np.zeros((n, MAX_PLACED, 3), dtype=int)
        self.schedule = placement_schedule([trace.residue_types[i] for i in self.positions])
        rank = {slot: step for step, slot in enumerate(self.schedule)}

        for row, position in enumerate(self.positions):
            template = template_for(trace.residue_types[position])
            for slot, atom in enumerate(template.placement_order):
                self.mask[row, slot] = True
                for k, ref in enumerate(template.anchors_of(atom)):
                    self.anchor_pos[row, slot, k] = position + ref.offset
                    if ref.name == "CA":
                        self.anchor_col[row, slot, k] = 0
                        continue
                    anchor_slot = template.slot_of(ref.name)
                    if ref.offset != 0 or rank[anchor_slot] >= rank[slot]:
                        raise TemplateLookupError(
                            f"{template.residue_type.value} atom {atom}: anchor {ref} is not placed earlier"
                        )
                    self.anchor_col[row, slot, k] = 1 + anchor_slot

    def __len__(self) -> int:
        return len(self.positions)

    def align(self, zframe: ZMatrixFrame) -> np.ndarray:
        """
        Values of zframe ordered like the plan rows.

        Raises:
            MissingRowsError: A non-terminal residue or one of its atoms has no row
            SkeletonMismatchError: Residue types disagree
        """
        values = np.zeros((len(self), MAX_PLACED, 3))
        for row, key in enumerate(self.keys):
            index = zframe.index_of(key.chain_id, key.seq_index)
            if index < 0:
                raise MissingRowsError(f"Z-matrix has no rows for residue {key.label}")
            if zframe.keys[index].residue_type != key.residue_type:
                raise SkeletonMismatchError(
                    f"Z-matrix residue {zframe.keys[index].label} does not match trace residue {key.label}"
                )
            missing = np.flatnonzero(self.mask[row] & ~zframe.mask[index])
            if missing.size:
                atom = template_for(key.residue_type).placement_order[missing[0]]
                raise MissingRowsError(f"Z-matrix has no row for atom {atom} of residue {key.label}")
            values[row] = zframe.values[index]
        return values

    def place(self, values: np.ndarray, with_tangents: bool = False) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """
        Run every placement pass.

        Returns:
            Coordinate buffer (n_trace, 1 + MAX_PLACED, 3) with NaN for absent
            atoms, and tangents (n_rows, MAX_PLACED, N_PARAMS, 3) when requested
        """
        n_trace = len(self.trace)
        buffer = np.full((n_trace, 1 + MAX_PLACED, 3), np.nan)
        buffer[:, 0] = self.trace.coords
        tangents = np.zeros((n_trace, 1 + MAX_PLACED, N_PARAMS, 3)) if with_tangents else None

        for slot in self.schedule:
            rows = np.flatnonzero(self.mask[:, slot])
            if rows.size == 0:
                continue
            pos = self.anchor_pos[rows, slot]
            col = self.anchor_col[rows, slot]
            b, c, d = (buffer[pos[:, k], col[:, k]] for k in range(3))
            length = values[rows, slot, BOND]
            theta = values[rows, slot, ANGLE]
            tau = values[rows, slot, TORSION]
            targets = self.positions[rows]
            try:
                if with_tangents:
                    db, dc, dd = (tangents[pos[:, k], col[:, k]] for k in range(3))
                    seed = np.zeros((rows.size, 3, N_PARAMS))
                    seed[:, :, 3 * slot : 3 * slot + 3] = np.eye(3)
                    placed, dplaced = place_atoms_jvp(
                        b, c, d, db, dc, dd, length, theta, tau, seed[:, BOND], seed[:, ANGLE], seed[:, TORSION]
                    )
                    tangents[targets, 1 + slot] = dplaced
                else:
                    placed = place_atoms(b, c, d, length, theta, tau)
            except DegenerateGeometryError as e:
                row = rows[e.index]
                atom = template_for(self.keys[row].residue_type).placement_order[slot]
                raise DegenerateGeometryError(
                    f"degenerate anchors placing atom {atom} of residue {self.keys[row].label}", index=int(row)
                ) from e
            buffer[targets, 1 + slot] = placed

        if with_tangents:
            tangents = tangents[self.positions, 1:]
        return buffer, tangents

    def to_structure(self, buffer: np.ndarray) -> Structure:
        """Residues with CA only at chain ends and full heavy-atom sets elsewhere."""
        residues = []
        for position in range(len(self.trace)):
            residue_type = self.trace.residue_types[position]
            residue = Residue(residue_type, self.trace.seq_indices[position], self.trace.chain_ids[position])
            if self.trace.terminal[position]:
                residue.terminal = True
                residue.atoms["CA"] = Atom("CA", "C", buffer[position, 0].copy())
            else:
                template = template_for(residue_type)
                for name in OUTPUT_ORDER + template.side_chain:
                    column = 0 if name == "CA" else 1 + template.slot_of(name)
                    residue.atoms[name] = Atom(name, template.element_of(name), buffer[position, column].copy())
            residues.append(residue)
        return Structure(residues, frame_id=self.trace.frame_id)


def reconstruct_frame(trace: CGTrace, zframe: ZMatrixFrame, plan: Optional[PlacementPlan] = None) -> Structure:
    """
    Place every non-terminal heavy atom from the trace and the Z-matrix.

    Args:
        trace: CA trace supplying fixed CA positions
        zframe: Internal coordinates of the non-terminal residues
        plan: Precomputed plan for this trace

    Returns:
        Structure with terminal residues reduced to CA
    """
    plan = plan or PlacementPlan(trace)
    buffer, _ = plan.place(plan.align(zframe))
    return plan.to_structure(buffer)


def reconstruct_with_jacobian(
    trace: CGTrace, zframe: ZMatrixFrame, plan: Optional[PlacementPlan] = None
) -> Tuple[Structure, PlacementJacobian]:
    """reconstruct_frame plus the Jacobian accumulated alongside the placement."""
    plan = plan or PlacementPlan(trace)
    buffer, tangents = plan.place(plan.align(zframe), with_tangents=True)
    return plan.to_structure(buffer), PlacementJacobian(list(plan.keys), plan.mask.copy(), tangents)

"""
Reconstruction loss of a predicted Z-matrix against a ground-truth frame,
with analytic gradients with respect to every internal coordinate.

Direct terms (bond, angle, torsion) differentiate the internal coordinates
themselves; coordinate terms (xyz, steric) are pulled back through the
placement Jacobian.
"""
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from evaluation.bond_graph import exclusion_codes
from losses.objectives import (
    LossReport,
    angular_loss,
    angular_loss_grad,
    bond_loss,
    bond_loss_grad,
    steric_loss_and_gradient,
    xyz_loss,
    xyz_loss_grad,
)
from losses.weights import LossWeights
from structure_io.models import CGTrace, Structure
from templates import MAX_PLACED, bond_graph_reference, template_for
from zmatrix.frame import ANGLE, BOND, TORSION, ZMatrixFrame, extract
from zmatrix.reconstruct import PlacementPlan


class ReconTarget:
    """
    Ground truth of one frame laid out for repeated loss evaluation.

    The atom universe is every atom of the non-terminal residues: their CA
    (fixed) and their placed atoms.
    """

    def __init__(
        self,
        structure: Structure,
        trace: CGTrace,
        true_zframe: Optional[ZMatrixFrame] = None,
        plan: Optional[PlacementPlan] = None,
        method: str = "kdtree",
    ):
        self.plan = plan or PlacementPlan(trace)
        self.method = method
        self.true_values = self.plan.align(true_zframe if true_zframe is not None else extract(structure, trace))

        keys, pos, col, rows, slots = [], [], [], [], []
        for row, position in enumerate(self.plan.positions):
            template = template_for(trace.residue_types[position])
            keys.append((int(position), "CA"))
            pos.append(position)
            col.append(0)
            rows.append(row)
            slots.append(-1)
            for slot, atom in enumerate(template.placement_order):
                keys.append((int(position), atom))
                pos.append(position)
                col.append(1 + slot)
                rows.append(row)
                slots.append(slot)

        self.keys = keys
        self.atom_pos = np.array(pos, dtype=int)
        self.atom_col = np.array(col, dtype=int)
        self.atom_row = np.array(rows, dtype=int)
        self.atom_slot = np.array(slots, dtype=int)
        self.placed = self.atom_col > 0
        self.true_coords = structure.coordinates(keys)

        graph = nx.Graph()
        graph.add_nodes_from(keys)
        edges = bond_graph_reference(trace.residue_types, trace.chain_ids)
        graph.add_edges_from((a, b) for a, b in edges if a in graph and b in graph)
        self.excluded = exclusion_codes(graph, keys)

    def evaluate(
        self, values: np.ndarray, weights: LossWeights, with_gradient: bool = False
    ) -> Tuple[LossReport, Optional[np.ndarray]]:
        """
        Loss terms of predicted values (aligned with the plan rows).

        Returns:
            LossReport and, when requested, d recon / d values of shape (n, MAX_PLACED, 3)
        """
        mask = self.plan.mask
        buffer, tangents = self.plan.place(values, with_tangents=with_gradient)
        coords = buffer[self.atom_pos, self.atom_col]

        pred_d, true_d = values[..., BOND][mask], self.true_values[..., BOND][mask]
        pred_a, true_a = values[..., ANGLE][mask], self.true_values[..., ANGLE][mask]
        pred_t, true_t = values[..., TORSION][mask], self.true_values[..., TORSION][mask]

        placed_pred, placed_true = coords[self.placed], self.true_coords[self.placed]
        steric, steric_grad = steric_loss_and_gradient(coords, self.excluded, method=self.method)
        report = LossReport.combine(
            bond_loss(pred_d, true_d),
            angular_loss(pred_a, true_a),
            angular_loss(pred_t, true_t),
            xyz_loss(placed_pred, placed_true),
            steric,
            weights,
        )
        if not with_gradient:
            return report, None

        grad = np.zeros((len(self.plan), MAX_PLACED, 3))
        grad[..., BOND][mask] = weights.gamma * bond_loss_grad(pred_d, true_d)
        grad[..., ANGLE][mask] = weights.gamma * angular_loss_grad(pred_a, true_a)
        grad[..., TORSION][mask] = weights.delta * angular_loss_grad(pred_t, true_t)

        coord_grad = weights.zeta * steric_grad
        coord_grad[self.placed] += weights.eta * xyz_loss_grad(placed_pred, placed_true)
        slot_grad = np.zeros((len(self.plan), MAX_PLACED, 3))
        slot_grad[self.atom_row[self.placed], self.atom_slot[self.placed]] = coord_grad[self.placed]
        grad += np.einsum("rskc,rsc->rk", tangents, slot_grad).reshape(grad.shape) * mask[:, :, None]
        return report, grad


def recon_report(
    structure: Structure, trace: CGTrace, zmatrix: ZMatrixFrame, weights: Optional[LossWeights] = None
) -> LossReport:
    """Loss terms of a predicted Z-matrix against the ground-truth frame."""
    target = ReconTarget(structure, trace)
    report, _ = target.evaluate(target.plan.align(zmatrix), weights or LossWeights())
    return report


def loss_gradients(
    structure: Structure, trace: CGTrace, zmatrix: ZMatrixFrame, weights: Optional[LossWeights] = None
) -> ZMatrixFrame:
    """
    Gradient of the reconstruction loss with respect to every predicted internal coordinate.

    Returns:
        Frame over the non-terminal residues whose values hold d L_recon / d (d, theta, tau)
    """
    target = ReconTarget(structure, trace)
    _, grad = target.evaluate(target.plan.align(zmatrix), weights or LossWeights(), with_gradient=True)
    return ZMatrixFrame(list(target.plan.keys), grad, target.plan.mask.copy(), zmatrix.frame_id)

"""Long-range interaction recovery: heteroatom contacts and aromatic ring stacking."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from evaluation.bond_graph import exclusion_codes, reference_graph
from evaluation.neighbors import nonbonded_pairs, pair_distances
from structure_io.models import AtomKey, Structure
from templates import AROMATIC_RINGS, element_info

ATOM_CUTOFF = 3.3  # Å, heteroatom contact in the reference frame
PI_CUTOFF = 5.5  # Å, ring centroid contact in the reference frame
ATOM_HINGE = 4.0
PI_HINGE = 6.0


@dataclass
class InteractionSet:
    atom_pairs: List[Tuple[AtomKey, AtomKey]] = field(default_factory=list)
    ring_pairs: List[Tuple[int, int]] = field(default_factory=list)


def ring_centroids(structure: Structure) -> Dict[int, np.ndarray]:
    """Centroid of the aromatic ring of every non-terminal residue that has one."""
    centroids = {}
    for position, residue in enumerate(structure.residues):
        ring = AROMATIC_RINGS.get(residue.residue_type)
        if residue.terminal or ring is None:
            continue
        if all(name in residue.atoms and residue.atoms[name].placed for name in ring):
            centroids[position] = np.mean([residue.coord(name) for name in ring], axis=0)
    return centroids


def identify_interactions(
    structure: Structure,
    atom_cutoff: float = ATOM_CUTOFF,
    pi_cutoff: float = PI_CUTOFF,
    method: str = "kdtree",
) -> InteractionSet:
    """
    Interactions present in a reference frame.

    Heteroatom pairs (N, O, S, P) closer than atom_cutoff from different
    residues, skipping 1-2 and 1-3 pairs; ring pairs whose centroids are
    closer than pi_cutoff.
    """
    keys = [k for k in structure.evaluated_keys() if element_info(structure.element(k)).heteroatom]
    coords = structure.coordinates(keys)
    excluded = exclusion_codes(reference_graph(structure), keys)
    i, j, _ = nonbonded_pairs(coords, atom_cutoff, excluded, method)
    atom_pairs = [(keys[a], keys[b]) for a, b in zip(i, j) if keys[a][0] != keys[b][0]]

    centroids = ring_centroids(structure)
    positions = sorted(centroids)
    ring_pairs = []
    if len(positions) > 1:
        ci, cj, _ = nonbonded_pairs(np.array([centroids[p] for p in positions]), pi_cutoff, None, method)
        ring_pairs = [(positions[a], positions[b]) for a, b in zip(ci, cj)]
    return InteractionSet(atom_pairs, ring_pairs)


def interaction_scores(
    reference: Structure,
    generated: Structure,
    interactions: Optional[InteractionSet] = None,
    atom_hinge: float = ATOM_HINGE,
    pi_hinge: float = PI_HINGE,
) -> Tuple[float, float]:
    """
    Hinge penalties on the generated distances of reference interactions.

    Returns:
        (sum of max(d - atom_hinge, 0), sum of max(d - pi_hinge, 0)); lower is better
    """
    interactions = interactions or identify_interactions(reference)

    atom_score = 0.0
    if interactions.atom_pairs:
        left = generated.coordinates([a for a, _ in interactions.atom_pairs])
        right = generated.coordinates([b for _, b in interactions.atom_pairs])
        index = np.arange(len(left))
        dist = pair_distances(np.vstack([left, right]), index, index + len(left))
        atom_score = float(np.sum(np.maximum(dist - atom_hinge, 0.0)))

    pi_score = 0.0
    if interactions.ring_pairs:
        centroids = ring_centroids(generated)
        dist = np.array([np.linalg.norm(centroids[a] - centroids[b]) for a, b in interactions.ring_pairs])
        pi_score = float(np.sum(np.maximum(dist - pi_hinge, 0.0)))
    return atom_score, pi_score

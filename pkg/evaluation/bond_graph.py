"""Covalent bond graphs over atom keys (residue position, atom name)."""
from typing import Dict, List, Sequence

import networkx as nx
import numpy as np

from evaluation.neighbors import neighbor_pairs, pair_codes
from structure_io.models import AtomKey, Structure
from templates import MAX_COVALENT_RADIUS, bond_graph_reference, element_info
from utils.errors import SkeletonMismatchError

DEFAULT_TOLERANCE = 0.4  # Å


def reference_graph(structure: Structure) -> nx.Graph:
    """Template bond graph restricted to the evaluated atoms (non-terminal residues)."""
    keys = structure.evaluated_keys()
    graph = nx.Graph()
    graph.add_nodes_from(keys)
    edges = bond_graph_reference(
        [r.residue_type for r in structure.residues], [r.chain_id for r in structure.residues]
    )
    graph.add_edges_from((a, b) for a, b in edges if a in graph and b in graph)
    return graph


def infer_bond_graph(structure: Structure, tolerance: float = DEFAULT_TOLERANCE, method: str = "kdtree") -> nx.Graph:
    """
    Bonds from distances: an edge wherever d < r_a + r_b + tolerance.

    Nodes are the evaluated atoms of the structure.
    """
    keys = structure.evaluated_keys()
    coords = structure.coordinates(keys)
    radii = np.array([element_info(structure.element(key)).covalent_radius for key in keys])

    graph = nx.Graph()
    graph.add_nodes_from(keys)
    i, j, dist = neighbor_pairs(coords, 2.0 * MAX_COVALENT_RADIUS + tolerance, method)
    bonded = dist < radii[i] + radii[j] + tolerance
    graph.add_edges_from((keys[a], keys[b]) for a, b in zip(i[bonded], j[bonded]))
    return graph


def exclusion_pairs(graph: nx.Graph) -> List[tuple]:
    """Node pairs separated by one bond (1-2) or two bonds (1-3)."""
    pairs = set()
    for a, b in graph.edges():
        pairs.add(frozenset((a, b)))
    for centre in graph.nodes():
        neighbours = list(graph.neighbors(centre))
        for x in range(len(neighbours)):
            for y in range(x + 1, len(neighbours)):
                pairs.add(frozenset((neighbours[x], neighbours[y])))
    return [tuple(sorted(p)) for p in pairs]


def exclusion_codes(graph: nx.Graph, keys: Sequence[AtomKey]) -> np.ndarray:
    """1-2 and 1-3 pairs as codes over the index space of keys."""
    index: Dict[AtomKey, int] = {key: n for n, key in enumerate(keys)}
    codes = []
    for a, b in exclusion_pairs(graph):
        if a in index and b in index:
            i, j = sorted((index[a], index[b]))
            codes.append((i, j))
    if not codes:
        return np.zeros(0, dtype=np.int64)
    arr = np.array(codes)
    return np.unique(pair_codes(arr[:, 0], arr[:, 1], len(keys)))


def ged_ratio(generated: nx.Graph, reference: nx.Graph) -> float:
    """
    Graph edit distance over the reference edge count.

    Node sets are identical, so the distance is the size of the edge
    symmetric difference.

    Raises:
        SkeletonMismatchError: Node sets differ
    """
    if set(generated.nodes()) != set(reference.nodes()):
        extra = sorted(set(generated.nodes()) ^ set(reference.nodes()))
        raise SkeletonMismatchError(f"bond graphs cover different atoms, first difference {extra[0]}")
    edges_gen = {frozenset(e) for e in generated.edges()}
    edges_ref = {frozenset(e) for e in reference.edges()}
    if not edges_ref:
        return 0.0 if not edges_gen else float("inf")
    return len(edges_gen ^ edges_ref) / len(edges_ref)

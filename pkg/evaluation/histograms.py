"""Distance histograms over non-bonded heavy-atom pairs."""
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Tuple

import numpy as np
import pandas as pd

from evaluation.bond_graph import exclusion_codes, reference_graph
from evaluation.neighbors import nonbonded_pairs
from structure_io.models import Structure
from utils.errors import MissingAtomError, UsageError

HBOND_BAND = (2.7, 3.3)
VDW_BAND = (3.3, 4.0)


@dataclass
class DistanceHistogram:
    edges: np.ndarray
    counts: np.ndarray

    def band_sum(self, low: float, high: float) -> int:
        """Counts of the bins lying inside [low, high)."""
        inside = (self.edges[:-1] >= low - 1e-9) & (self.edges[1:] <= high + 1e-9)
        return int(self.counts[inside].sum())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin_lo": self.edges[:-1], "bin_hi": self.edges[1:], "count": self.counts})


def histogram_edges(max_distance: float, bin_width: float) -> np.ndarray:
    n_bins = int(round(max_distance / bin_width))
    # rounding keeps edges like 3.7 exact instead of 3.7000000000000002
    return np.round(np.arange(n_bins + 1) * bin_width, 9)


def distance_histogram(
    structures: Iterable[Structure],
    max_distance: float = 5.0,
    bin_width: float = 0.1,
    method: str = "kdtree",
) -> DistanceHistogram:
    """
    Pool non-bonded distances (1-2 and 1-3 pairs excluded) of the evaluated
    atoms below max_distance into half-open bins [lo, hi).
    """
    if bin_width <= 0 or max_distance <= 0:
        raise UsageError("bin width and maximum distance must be positive")
    edges = histogram_edges(max_distance, bin_width)
    counts = np.zeros(len(edges) - 1, dtype=int)
    for structure in structures:
        keys = structure.evaluated_keys()
        coords = structure.coordinates(keys)
        excluded = exclusion_codes(reference_graph(structure), keys)
        _, _, dist = nonbonded_pairs(coords, edges[-1], excluded, method)
        counts += np.histogram(dist, bins=edges)[0]
    return DistanceHistogram(edges, counts)


class AtomSelector(NamedTuple):
    chain_id: str
    seq_index: int
    atom: str

    @classmethod
    def parse(cls, text: str) -> "AtomSelector":
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"atom selector {text!r} must look like chain:resSeq:atom")
        chain_id, seq, atom = parts
        try:
            return cls("" if chain_id == "_" else chain_id, int(seq), atom)
        except ValueError:
            raise UsageError(f"atom selector {text!r} has a non-integer residue number") from None

    def locate(self, structure: Structure) -> np.ndarray:
        for residue in structure.residues:
            if residue.chain_id == self.chain_id and residue.seq_index == self.seq_index:
                return residue.coord(self.atom)
        raise MissingAtomError(f"residue {self.chain_id or '_'}:{self.seq_index} not found")


def pair_distances(structures: Iterable[Structure], first: AtomSelector, second: AtomSelector) -> pd.DataFrame:
    """Per-frame distance between two named atoms."""
    rows: List[Tuple[int, float]] = []
    for structure in structures:
        rows.append((structure.frame_id, float(np.linalg.norm(first.locate(structure) - second.locate(structure)))))
    return pd.DataFrame(rows, columns=["frame", "distance"])

"""Chain compactness: radius of gyration per chain, averaged over frames."""
from typing import Iterable

import numpy as np
import pandas as pd

from structure_io.models import Ensemble

COMPACTNESS_COLUMNS = ["entry", "chain", "length", "rg_mean"]


def radius_of_gyration(coords: np.ndarray) -> float:
    """Rg with unit weights, in Å."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    if len(coords) == 0:
        return 0.0
    centred = coords - coords.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(centred**2, axis=1))))


def compactness_stats(ensembles: Iterable[Ensemble]) -> pd.DataFrame:
    """
    One row per (entry, chain): residue count and mean Rg over frames.

    Rg uses every atom with coordinates in the chain.
    """
    rows = []
    for ensemble in ensembles:
        per_chain = {}
        for frame in ensemble.frames:
            for chain_id, residues in frame.chains().items():
                coords = [atom.coord for r in residues for atom in r.atoms.values() if atom.placed]
                per_chain.setdefault(chain_id, (len(residues), []))[1].append(radius_of_gyration(np.array(coords)))
        for chain_id, (length, values) in per_chain.items():
            rows.append(
                {"entry": ensemble.entry_id, "chain": chain_id, "length": length, "rg_mean": float(np.mean(values))}
            )
    return pd.DataFrame(rows, columns=COMPACTNESS_COLUMNS)

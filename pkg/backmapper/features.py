"""Rotation- and translation-invariant features of a CA window."""
from dataclasses import asdict, dataclass

import numpy as np

from structure_io.models import CGTrace
from templates import RESIDUE_TYPES
from utils.errors import DegenerateGeometryError, FeatureError
from zmatrix.geometry import bond_angle, dihedral

TYPE_INDEX = {t: i for i, t in enumerate(RESIDUE_TYPES)}


@dataclass(frozen=True)
class FeatureSpec:
    """
    Window of +/- window residues around the centre.

    Layout: CA-CA distances ordered by (separation, start), CA angles at the
    interior positions, (sin, cos) of CA pseudo-torsions, validity mask per
    position, one-hot of the centre residue type.
    """

    window: int = 2

    @property
    def n_positions(self) -> int:
        return 2 * self.window + 1

    @property
    def n_distances(self) -> int:
        return self.n_positions * (self.n_positions - 1) // 2

    @property
    def n_angles(self) -> int:
        return max(self.n_positions - 2, 0)

    @property
    def n_torsions(self) -> int:
        return max(self.n_positions - 3, 0)

    @property
    def dimension(self) -> int:
        return self.n_distances + self.n_angles + 2 * self.n_torsions + self.n_positions + len(RESIDUE_TYPES)

    def to_dict(self) -> dict:
        return asdict(self)


def featurize(trace: CGTrace, index: int, spec: FeatureSpec = FeatureSpec()) -> np.ndarray:
    """
    Feature vector of residue index.

    Window positions outside the chain are zero and flagged invalid.

    Raises:
        FeatureError: index is a terminal residue
    """
    if trace.terminal[index]:
        raise FeatureError(f"residue {trace.label(index)} is terminal and has no features")

    w = spec.window
    positions = [index + offset for offset in range(-w, w + 1)]
    valid = [0 <= p < len(trace) and trace.chain_ids[p] == trace.chain_ids[index] for p in positions]
    coords = [trace.coords[p] if ok else None for p, ok in zip(positions, valid)]

    features = []
    for separation in range(1, spec.n_positions):
        for start in range(spec.n_positions - separation):
            end = start + separation
            if valid[start] and valid[end]:
                features.append(float(np.linalg.norm(coords[end] - coords[start])))
            else:
                features.append(0.0)

    for k in range(1, spec.n_positions - 1):
        if valid[k - 1] and valid[k] and valid[k + 1]:
            features.append(bond_angle(coords[k - 1], coords[k], coords[k + 1]))
        else:
            features.append(0.0)

    for k in range(spec.n_torsions):
        if all(valid[k : k + 4]):
            try:
                tau = dihedral(*coords[k : k + 4])
                features.extend([np.sin(tau), np.cos(tau)])
                continue
            except DegenerateGeometryError:
                pass
        features.extend([0.0, 0.0])

    features.extend(1.0 if ok else 0.0 for ok in valid)

    one_hot = [0.0] * len(RESIDUE_TYPES)
    one_hot[TYPE_INDEX[trace.residue_types[index]]] = 1.0
    features.extend(one_hot)
    return np.array(features, dtype=float)


def featurize_trace(trace: CGTrace, spec: FeatureSpec = FeatureSpec()) -> np.ndarray:
    """Features of every non-terminal residue, in trace order."""
    rows = [featurize(trace, i, spec) for i in range(len(trace)) if not trace.terminal[i]]
    if not rows:
        return np.zeros((0, spec.dimension))
    return np.vstack(rows)

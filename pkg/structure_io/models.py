"""In-memory structures: atoms, residues, frames, ensembles and CA traces."""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from templates import ResidueType
from utils.errors import MissingAtomError

AtomKey = Tuple[int, str]  # (residue position, atom name)


@dataclass
class Atom:
    name: str
    element: str
    coord: Optional[np.ndarray] = None

    @property
    def placed(self) -> bool:
        return self.coord is not None


@dataclass
class Residue:
    residue_type: ResidueType
    seq_index: int
    chain_id: str
    atoms: Dict[str, Atom] = field(default_factory=dict)
    terminal: bool = False

    @property
    def resname(self) -> str:
        return self.residue_type.value

    @property
    def label(self) -> str:
        return residue_label(self.chain_id, self.residue_type, self.seq_index)

    def coord(self, name: str) -> np.ndarray:
        atom = self.atoms.get(name)
        if atom is None or atom.coord is None:
            raise MissingAtomError(f"atom {name} missing from residue {self.label}")
        return atom.coord

    def copy(self) -> "Residue":
        atoms = {
            name: Atom(a.name, a.element, None if a.coord is None else a.coord.copy()) for name, a in self.atoms.items()
        }
        return Residue(self.residue_type, self.seq_index, self.chain_id, atoms, self.terminal)


def residue_label(chain_id: str, residue_type: ResidueType, seq_index: int) -> str:
    return f"{chain_id or '_'}:{residue_type.value}{seq_index}"


@dataclass
class Structure:
    """One frame: residues in chain order."""

    residues: List[Residue]
    frame_id: int = 0

    def __len__(self) -> int:
        return len(self.residues)

    @property
    def chain_ids(self) -> List[str]:
        seen: List[str] = []
        for residue in self.residues:
            if residue.chain_id not in seen:
                seen.append(residue.chain_id)
        return seen

    def chains(self) -> Dict[str, List[Residue]]:
        grouped: Dict[str, List[Residue]] = {}
        for residue in self.residues:
            grouped.setdefault(residue.chain_id, []).append(residue)
        return grouped

    def skeleton(self) -> List[Tuple[str, int, str, Tuple[str, ...]]]:
        return [(r.chain_id, r.seq_index, r.resname, tuple(r.atoms)) for r in self.residues]

    def evaluated_keys(self) -> List[AtomKey]:
        """Placed atoms of non-terminal residues, in residue then atom order."""
        return [
            (position, name)
            for position, residue in enumerate(self.residues)
            if not residue.terminal
            for name, atom in residue.atoms.items()
            if atom.placed
        ]

    def coordinates(self, keys: Iterable[AtomKey]) -> np.ndarray:
        keys = list(keys)
        if not keys:
            return np.zeros((0, 3))
        return np.array([self.residues[position].coord(name) for position, name in keys], dtype=float)

    def element(self, key: AtomKey) -> str:
        position, name = key
        return self.residues[position].atoms[name].element

    def copy(self) -> "Structure":
        return Structure([r.copy() for r in self.residues], self.frame_id)


@dataclass
class Ensemble:
    """Frames sharing one atom skeleton."""

    frames: List[Structure]
    entry_id: str = ""
    notes: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class CGTrace:
    """Coarse-grained trace: one CA position per residue."""

    coords: np.ndarray
    residue_types: List[ResidueType]
    chain_ids: List[str]
    seq_indices: List[int]
    terminal: np.ndarray
    frame_id: int = 0

    def __len__(self) -> int:
        return len(self.residue_types)

    def label(self, index: int) -> str:
        return residue_label(self.chain_ids[index], self.residue_types[index], self.seq_indices[index])

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "CGTrace":
        coords = self.coords @ np.asarray(rotation, dtype=float).T + np.asarray(translation, dtype=float)
        return CGTrace(
            coords, list(self.residue_types), list(self.chain_ids), list(self.seq_indices), self.terminal.copy(), self.frame_id
        )


def terminal_mask(chain_ids: List[str]) -> np.ndarray:
    """True for the first and last residue of every chain."""
    n = len(chain_ids)
    mask = np.zeros(n, dtype=bool)
    for i in range(n):
        if i == 0 or chain_ids[i - 1] != chain_ids[i]:
            mask[i] = True
        if i == n - 1 or chain_ids[i + 1] != chain_ids[i]:
            mask[i] = True
    return mask


def cg_map(structure: Structure) -> CGTrace:
    """
    Map a structure to its CA trace.

    Terminal flags are recomputed from chain boundaries.
    """
    coords = np.array([residue.coord("CA") for residue in structure.residues], dtype=float).reshape(-1, 3)
    chain_ids = [r.chain_id for r in structure.residues]
    return CGTrace(
        coords=coords,
        residue_types=[r.residue_type for r in structure.residues],
        chain_ids=chain_ids,
        seq_indices=[r.seq_index for r in structure.residues],
        terminal=terminal_mask(chain_ids),
        frame_id=structure.frame_id,
    )

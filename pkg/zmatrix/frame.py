"""Z-matrix frames: extraction from structures and the columnar text format."""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from structure_io.models import CGTrace, Structure, residue_label
from templates import MAX_PLACED, AtomRef, ResidueType, template_for
from utils.errors import DegenerateGeometryError, ModelFormatError, SkeletonMismatchError
from zmatrix.geometry import bond_angles, dihedrals

# columns of ZMatrixFrame.values
BOND, ANGLE, TORSION = 0, 1, 2

TEXT_HEADER = "# chain res_index atom j k l d theta tau"


class ResidueKey(NamedTuple):
    chain_id: str
    seq_index: int
    residue_type: ResidueType

    @property
    def label(self) -> str:
        return residue_label(self.chain_id, self.residue_type, self.seq_index)


@dataclass(frozen=True)
class ZRow:
    chain_id: str
    seq_index: int
    atom: str
    anchors: Tuple[AtomRef, AtomRef, AtomRef]
    d: float
    theta: float
    tau: float


@dataclass
class ZMatrixFrame:
    """
    Internal coordinates of one frame.

    values[r, s] holds (d, theta, tau) of placement slot s of row residue r;
    mask[r, s] tells which slots exist for the residue type.
    """

    keys: List[ResidueKey]
    values: np.ndarray
    mask: np.ndarray
    frame_id: int = 0
    _index: Dict[Tuple[str, int], int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._index = {(k.chain_id, k.seq_index): i for i, k in enumerate(self.keys)}

    def __len__(self) -> int:
        return len(self.keys)

    @classmethod
    def empty(cls, keys: Sequence[ResidueKey], frame_id: int = 0) -> "ZMatrixFrame":
        keys = list(keys)
        mask = np.zeros((len(keys), MAX_PLACED), dtype=bool)
        for i, key in enumerate(keys):
            mask[i, : len(template_for(key.residue_type).placement_order)] = True
        return cls(keys, np.zeros((len(keys), MAX_PLACED, 3)), mask, frame_id)

    def index_of(self, chain_id: str, seq_index: int) -> int:
        return self._index.get((chain_id, seq_index), -1)

    def with_values(self, values: np.ndarray) -> "ZMatrixFrame":
        return ZMatrixFrame(list(self.keys), np.array(values, dtype=float), self.mask.copy(), self.frame_id)

    def rows(self) -> Iterator[ZRow]:
        for i, key in enumerate(self.keys):
            template = template_for(key.residue_type)
            for slot, atom in enumerate(template.placement_order):
                if not self.mask[i, slot]:
                    continue
                d, theta, tau = self.values[i, slot]
                yield ZRow(key.chain_id, key.seq_index, atom, template.anchors_of(atom), float(d), float(theta), float(tau))

    @classmethod
    def from_rows(cls, rows: Sequence[ZRow], residue_types: Dict[Tuple[str, int], ResidueType], frame_id: int = 0):
        """
        Assemble a frame from rows; residue types come from the matching trace.

        Raises:
            SkeletonMismatchError: A row names a residue absent from the trace
            ModelFormatError: A row names an atom or anchors not in the template
        """
        keys: List[ResidueKey] = []
        seen: Dict[Tuple[str, int], int] = {}
        for row in rows:
            ident = (row.chain_id, row.seq_index)
            if ident not in seen:
                if ident not in residue_types:
                    raise SkeletonMismatchError(f"Z-matrix residue {row.chain_id or '_'}:{row.seq_index} is not in the trace")
                seen[ident] = len(keys)
                keys.append(ResidueKey(row.chain_id, row.seq_index, residue_types[ident]))

        frame = cls(keys, np.zeros((len(keys), MAX_PLACED, 3)), np.zeros((len(keys), MAX_PLACED), dtype=bool), frame_id)
        for row in rows:
            i = seen[(row.chain_id, row.seq_index)]
            template = template_for(keys[i].residue_type)
            try:
                slot = template.slot_of(row.atom)
            except KeyError as e:
                raise ModelFormatError(f"{keys[i].label}: {e}") from e
            if tuple(row.anchors) != tuple(template.anchors_of(row.atom)):
                raise ModelFormatError(f"{keys[i].label} atom {row.atom}: anchors differ from the template")
            frame.values[i, slot] = (row.d, row.theta, row.tau)
            frame.mask[i, slot] = True
        return frame

    def to_text(self) -> str:
        return write_zmatrix([self])


def _resolve(structure: Structure, trace: CGTrace, position: int, ref: AtomRef) -> np.ndarray:
    if ref.name == "CA":
        return trace.coords[position + ref.offset]
    return structure.residues[position + ref.offset].coord(ref.name)


def extract(structure: Structure, trace: CGTrace) -> ZMatrixFrame:
    """
    Measure the Z-matrix of every non-terminal residue.

    CA positions come from the trace; all other atoms from the structure.

    Raises:
        SkeletonMismatchError: Structure and trace residues differ
        MissingAtomError: A target or anchor atom is absent
        DegenerateGeometryError: Anchors are collinear
    """
    if len(structure.residues) != len(trace):
        raise SkeletonMismatchError(f"structure has {len(structure.residues)} residues, trace has {len(trace)}")
    for position, residue in enumerate(structure.residues):
        if (residue.chain_id, residue.seq_index, residue.residue_type) != (
            trace.chain_ids[position],
            trace.seq_indices[position],
            trace.residue_types[position],
        ):
            raise SkeletonMismatchError(f"residue {residue.label} does not match trace residue {trace.label(position)}")

    positions = [i for i in range(len(trace)) if not trace.terminal[i]]
    keys = [ResidueKey(trace.chain_ids[i], trace.seq_indices[i], trace.residue_types[i]) for i in positions]
    frame = ZMatrixFrame.empty(keys, frame_id=structure.frame_id)

    targets, anchors, where = [], [], []
    for row, position in enumerate(positions):
        template = template_for(trace.residue_types[position])
        for slot, atom in enumerate(template.placement_order):
            targets.append(structure.residues[position].coord(atom))
            anchors.append([_resolve(structure, trace, position, ref) for ref in template.anchors_of(atom)])
            where.append((row, slot, position, atom))

    if not targets:
        return frame

    a = np.array(targets)
    b, c, d = (np.array([anc[k] for anc in anchors]) for k in range(3))
    try:
        theta = bond_angles(a, b, c)
        tau = dihedrals(a, b, c, d)
    except DegenerateGeometryError as e:
        _, _, position, atom = where[e.index]
        raise DegenerateGeometryError(f"degenerate anchors for atom {atom} of {trace.label(position)}", index=e.index) from e
    length = np.sqrt(np.sum((a - b) ** 2, axis=-1))

    rows_idx = np.array([w[0] for w in where])
    slots_idx = np.array([w[1] for w in where])
    frame.values[rows_idx, slots_idx, BOND] = length
    frame.values[rows_idx, slots_idx, ANGLE] = theta
    frame.values[rows_idx, slots_idx, TORSION] = tau
    return frame


def write_zmatrix(frames: Sequence[ZMatrixFrame]) -> str:
    """Columnar text, one row per placed atom; frames separated by '# frame <id>'."""
    lines = [TEXT_HEADER]
    for frame in frames:
        lines.append(f"# frame {frame.frame_id}")
        for row in frame.rows():
            j, k, l = (str(ref) for ref in row.anchors)
            lines.append(
                f"{row.chain_id or '_'} {row.seq_index} {row.atom} {j} {k} {l} {row.d:.6f} {row.theta:.6f} {row.tau:.6f}"
            )
    return "\n".join(lines) + "\n"


def read_zmatrix(text: str, trace: CGTrace) -> List[ZMatrixFrame]:
    """Parse write_zmatrix output; residue types are taken from the trace."""
    residue_types = {(c, s): t for c, s, t in zip(trace.chain_ids, trace.seq_indices, trace.residue_types)}
    blocks: List[Tuple[int, List[ZRow]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("# frame"):
            blocks.append((int(stripped.split()[2]), []))
            continue
        if stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 9:
            raise ModelFormatError(f"line {lineno}: expected 9 columns, found {len(fields)}")
        if not blocks:
            blocks.append((0, []))
        chain_id = "" if fields[0] == "_" else fields[0]
        try:
            row = ZRow(
                chain_id,
                int(fields[1]),
                fields[2],
                tuple(AtomRef.parse(f) for f in fields[3:6]),
                float(fields[6]),
                float(fields[7]),
                float(fields[8]),
            )
        except ValueError as e:
            raise ModelFormatError(f"line {lineno}: {e}") from e
        blocks[-1][1].append(row)
    return [ZMatrixFrame.from_rows(rows, residue_types, frame_id) for frame_id, rows in blocks]


__all__ = [
    "ANGLE",
    "BOND",
    "TORSION",
    "ResidueKey",
    "ZMatrixFrame",
    "ZRow",
    "extract",
    "read_zmatrix",
    "write_zmatrix",
]

"""Fixed-column PDB reading and writing."""
import logging
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence, Union

import numpy as np

from structure_io.models import Atom, Ensemble, Residue, Structure
from templates import is_residue_code, residue_type_from_code
from utils.errors import ModelFormatError, SkeletonMismatchError, UnknownResidueError, UnplacedAtomError

logger = logging.getLogger(__name__)

KEPT_ALTLOCS = (" ", "A")
STRUCTURE_RECORDS = ("ATOM  ", "HETATM")


def _decode(source: Union[str, bytes, IO]) -> str:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError:
            return source.decode("latin-1")
    return source


def _infer_element(atom_name: str) -> str:
    name = atom_name.strip().lstrip("0123456789")
    return name[:1].upper() if name else ""


class _FrameBuilder:
    def __init__(self, frame_id: int):
        self.frame_id = frame_id
        self.residues: List[Residue] = []

    def add(self, chain_id: str, seq_index: int, resname: str, atom: Atom) -> None:
        residue_type = residue_type_from_code(resname)
        current = self.residues[-1] if self.residues else None
        if (
            current is None
            or current.chain_id != chain_id
            or current.seq_index != seq_index
            or current.residue_type != residue_type
        ):
            current = Residue(residue_type, seq_index, chain_id)
            self.residues.append(current)
        current.atoms.setdefault(atom.name, atom)

    def build(self) -> Structure:
        return Structure(self.residues, self.frame_id)


def parse_pdb(source: Union[str, bytes, IO], entry_id: str = "") -> Ensemble:
    """
    Parse PDB text into an ensemble.

    MODEL blocks become frames. Alternate locations other than blank/A and
    residues with insertion codes are dropped and noted. HETATM records are
    kept only for accepted residue codes (phosphorylated residues).

    Args:
        source: PDB content as text, bytes or a readable stream
        entry_id: Identifier stored on the ensemble

    Returns:
        Ensemble whose frames share one skeleton
    """
    text = _decode(source)
    frames: List[Structure] = []
    builder: Optional[_FrameBuilder] = None
    dropped_altloc = 0
    dropped_insertion = 0

    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6].ljust(6)
        if record == "MODEL ":
            builder = _FrameBuilder(len(frames))
            continue
        if record == "ENDMDL":
            if builder is not None:
                frames.append(builder.build())
            builder = None
            continue
        if record not in STRUCTURE_RECORDS:
            continue

        resname = line[17:20].strip()
        if record == "HETATM" and not is_residue_code(resname):
            continue
        if len(line) < 54:
            raise ModelFormatError(f"line {lineno}: coordinate record too short")

        altloc = line[16]
        if altloc not in KEPT_ALTLOCS:
            dropped_altloc += 1
            continue
        if line[26:27].strip():
            dropped_insertion += 1
            continue

        chain_id = line[21]
        try:
            seq_index = int(line[22:26])
            coord = np.array([float(line[30:38]), float(line[38:46]), float(line[46:54])])
        except ValueError as e:
            raise ModelFormatError(f"line {lineno}: {e}") from e

        name = line[12:16].strip()
        element = line[76:78].strip().upper() if len(line) >= 78 else ""
        if not element:
            element = _infer_element(line[12:16])

        if builder is None:
            builder = _FrameBuilder(len(frames))
        try:
            builder.add(chain_id.strip(), seq_index, resname, Atom(name, element, coord))
        except UnknownResidueError:
            raise UnknownResidueError(f"unknown residue {resname} at {chain_id.strip() or '_'}:{seq_index}") from None

    if builder is not None and builder.residues:
        frames.append(builder.build())

    frames = [frame for frame in frames if frame.residues]
    for index, frame in enumerate(frames):
        frame.frame_id = index
    if not frames:
        raise ModelFormatError("no coordinate records found")

    _check_skeletons(frames)

    notes = []
    if dropped_altloc:
        notes.append(f"dropped_altloc {dropped_altloc}")
    if dropped_insertion:
        notes.append(f"dropped_insertion {dropped_insertion}")
    for note in notes:
        logger.info("%s: %s", entry_id or "pdb", note)

    return Ensemble(frames=frames, entry_id=entry_id, notes=notes)


def _check_skeletons(frames: Sequence[Structure]) -> None:
    reference = frames[0].skeleton()
    for frame in frames[1:]:
        skeleton = frame.skeleton()
        for expected, found in zip(reference, skeleton):
            if expected != found:
                chain_id, seq_index, resname, atoms = found
                missing = [a for a in expected[3] if a not in atoms] + [a for a in atoms if a not in expected[3]]
                detail = f" atom {missing[0]}" if missing else ""
                raise SkeletonMismatchError(
                    f"frame {frame.frame_id} diverges at {chain_id or '_'}:{resname}{seq_index}{detail}"
                )
        if len(reference) != len(skeleton):
            raise SkeletonMismatchError(
                f"frame {frame.frame_id} has {len(skeleton)} residues, frame 0 has {len(reference)}"
            )


def read_pdb(path: Union[str, Path]) -> Ensemble:
    path = Path(path)
    return parse_pdb(path.read_bytes(), entry_id=path.stem)


def _atom_line(serial: int, name: str, resname: str, chain_id: str, seq_index: int, coord, element: str) -> str:
    name_field = name if len(name) >= 4 else f" {name}"
    x, y, z = (float(v) for v in coord)
    return (
        f"ATOM  {serial % 100000:>5} {name_field:<4} {resname:>3} {chain_id[:1] or ' ':1}{seq_index:>4}    "
        f"{x:>8.3f}{y:>8.3f}{z:>8.3f}{1.0:>6.2f}{0.0:>6.2f}          {element:>2}"
    )


def _structure_lines(structure: Structure) -> List[str]:
    lines = []
    serial = 1
    previous_chain = None
    last = None
    for residue in structure.residues:
        if previous_chain is not None and residue.chain_id != previous_chain:
            lines.append(f"TER   {serial % 100000:>5}      {last.resname:>3} {last.chain_id[:1] or ' ':1}{last.seq_index:>4}")
            serial += 1
        for atom in residue.atoms.values():
            if atom.coord is None:
                if residue.terminal:
                    continue
                raise UnplacedAtomError(f"atom {atom.name} of residue {residue.label} has no coordinates")
            lines.append(
                _atom_line(serial, atom.name, residue.resname, residue.chain_id, residue.seq_index, atom.coord, atom.element)
            )
            serial += 1
        previous_chain = residue.chain_id
        last = residue
    if last is not None:
        lines.append(f"TER   {serial % 100000:>5}      {last.resname:>3} {last.chain_id[:1] or ' ':1}{last.seq_index:>4}")
    return lines


def write_pdb(obj: Union[Structure, Ensemble, Sequence[Structure]], remarks: Optional[Iterable[str]] = None) -> str:
    """
    Format a structure or an ensemble as PDB text.

    A single structure is written without MODEL records; ensembles get one
    MODEL block per frame. Coordinates are rounded to 0.001 Å.
    """
    lines = [f"REMARK   1 {remark}" for remark in (remarks or [])]
    if isinstance(obj, Structure):
        lines.extend(_structure_lines(obj))
    else:
        frames = obj.frames if isinstance(obj, Ensemble) else list(obj)
        for number, frame in enumerate(frames, start=1):
            lines.append(f"MODEL     {number:>4}")
            lines.extend(_structure_lines(frame))
            lines.append("ENDMDL")
    lines.append("END")
    return "\n".join(lines) + "\n"


def write_pdb_file(path: Union[str, Path], obj, remarks: Optional[Iterable[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(write_pdb(obj, remarks), encoding="utf-8")
    return path

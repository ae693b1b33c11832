"""
Residue chemistry: accepted residue codes, heavy-atom templates and anchor tables.

Every template atom except CA is placed from three anchors (j, k, l). Backbone
anchors refer to neighbouring CA atoms, side-chain anchors to atoms already
placed in the same residue.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

from templates.elements import element_of
from utils.errors import TemplateLookupError, UnknownResidueError


class ResidueType(str, Enum):
    ALA = "ALA"
    ARG = "ARG"
    ASN = "ASN"
    ASP = "ASP"
    CYS = "CYS"
    GLN = "GLN"
    GLU = "GLU"
    GLY = "GLY"
    HIS = "HIS"
    ILE = "ILE"
    LEU = "LEU"
    LYS = "LYS"
    MET = "MET"
    PHE = "PHE"
    PRO = "PRO"
    SER = "SER"
    THR = "THR"
    TRP = "TRP"
    TYR = "TYR"
    VAL = "VAL"
    TPO = "TPO"
    SEP = "SEP"


RESIDUE_ALIASES: Dict[str, ResidueType] = {"SPO": ResidueType.SEP}

RESIDUE_TYPES: Tuple[ResidueType, ...] = tuple(ResidueType)


class AtomRef(NamedTuple):
    """Atom of the residue at a relative sequence offset."""

    name: str
    offset: int = 0

    def __str__(self) -> str:
        if self.offset == 0:
            return self.name
        return f"{self.name}{self.offset:+d}"

    @classmethod
    def parse(cls, text: str) -> "AtomRef":
        for sign in ("+", "-"):
            if sign in text:
                name, _, off = text.partition(sign)
                return cls(name, int(sign + off))
        return cls(text)


Anchors = Tuple[AtomRef, AtomRef, AtomRef]

BACKBONE_ORDER: Tuple[str, ...] = ("O", "N", "C")

BACKBONE_ANCHORS: Dict[str, Anchors] = {
    "N": (AtomRef("CA"), AtomRef("CA", -1), AtomRef("CA", 1)),
    "C": (AtomRef("CA"), AtomRef("CA", 1), AtomRef("CA", -1)),
    "O": (AtomRef("C"), AtomRef("CA"), AtomRef("N")),
}

BACKBONE_BONDS: Tuple[Tuple[str, str], ...] = (("N", "CA"), ("CA", "C"), ("C", "O"))

PEPTIDE_BOND: Tuple[AtomRef, AtomRef] = (AtomRef("C"), AtomRef("N", 1))


def _chain(*names: str) -> Dict[str, Tuple[str, str, str]]:
    """Anchors of a linear side chain: each atom hangs off the previous one."""
    table: Dict[str, Tuple[str, str, str]] = {}
    previous = ("CA", "C", "N")
    for name in names:
        table[name] = previous
        previous = (name, previous[0], previous[1])
    return table


# side-chain atom -> (j, k, l), in placement order
SIDE_CHAIN_ANCHORS: Dict[ResidueType, Dict[str, Tuple[str, str, str]]] = {
    ResidueType.GLY: {},
    ResidueType.ALA: _chain("CB"),
    ResidueType.SER: _chain("CB", "OG"),
    ResidueType.CYS: _chain("CB", "SG"),
    ResidueType.VAL: {"CB": ("CA", "C", "N"), "CG1": ("CB", "CA", "C"), "CG2": ("CB", "CA", "C")},
    ResidueType.THR: {"CB": ("CA", "C", "N"), "OG1": ("CB", "CA", "C"), "CG2": ("CB", "CA", "C")},
    ResidueType.LEU: {**_chain("CB", "CG", "CD1"), "CD2": ("CG", "CB", "CA")},
    ResidueType.ILE: {
        "CB": ("CA", "C", "N"),
        "CG1": ("CB", "CA", "C"),
        "CG2": ("CB", "CA", "C"),
        "CD1": ("CG1", "CB", "CA"),
    },
    ResidueType.MET: _chain("CB", "CG", "SD", "CE"),
    ResidueType.PRO: _chain("CB", "CG", "CD"),
    ResidueType.ASP: {**_chain("CB", "CG", "OD1"), "OD2": ("CG", "CB", "CA")},
    ResidueType.ASN: {**_chain("CB", "CG", "OD1"), "ND2": ("CG", "CB", "CA")},
    ResidueType.GLU: {**_chain("CB", "CG", "CD", "OE1"), "OE2": ("CD", "CG", "CB")},
    ResidueType.GLN: {**_chain("CB", "CG", "CD", "OE1"), "NE2": ("CD", "CG", "CB")},
    ResidueType.LYS: _chain("CB", "CG", "CD", "CE", "NZ"),
    ResidueType.ARG: {**_chain("CB", "CG", "CD", "NE", "CZ", "NH1"), "NH2": ("CZ", "NE", "CD")},
    ResidueType.HIS: {
        **_chain("CB", "CG", "ND1"),
        "CD2": ("CG", "CB", "CA"),
        "CE1": ("ND1", "CG", "CB"),
        "NE2": ("CD2", "CG", "CB"),
    },
    ResidueType.PHE: {
        **_chain("CB", "CG", "CD1"),
        "CD2": ("CG", "CB", "CA"),
        "CE1": ("CD1", "CG", "CB"),
        "CE2": ("CD2", "CG", "CB"),
        "CZ": ("CE1", "CD1", "CG"),
    },
    ResidueType.TYR: {
        **_chain("CB", "CG", "CD1"),
        "CD2": ("CG", "CB", "CA"),
        "CE1": ("CD1", "CG", "CB"),
        "CE2": ("CD2", "CG", "CB"),
        "CZ": ("CE1", "CD1", "CG"),
        "OH": ("CZ", "CE1", "CD1"),
    },
    ResidueType.TRP: {
        **_chain("CB", "CG", "CD1"),
        "CD2": ("CG", "CB", "CA"),
        "NE1": ("CD1", "CG", "CB"),
        "CE2": ("CD2", "CG", "CB"),
        "CE3": ("CD2", "CG", "CB"),
        "CZ2": ("CE2", "CD2", "CG"),
        "CZ3": ("CE3", "CD2", "CG"),
        "CH2": ("CZ2", "CE2", "CD2"),
    },
    ResidueType.TPO: {
        "CB": ("CA", "C", "N"),
        "OG1": ("CB", "CA", "C"),
        "CG2": ("CB", "CA", "C"),
        "P": ("OG1", "CB", "CA"),
        "O1P": ("P", "OG1", "CB"),
        "O2P": ("P", "OG1", "CB"),
        "O3P": ("P", "OG1", "CB"),
    },
    ResidueType.SEP: {
        **_chain("CB", "OG", "P", "O1P"),
        "O2P": ("P", "OG", "CB"),
        "O3P": ("P", "OG", "CB"),
    },
}

# bonds not implied by the first anchor of a placed atom
RING_CLOSURES: Dict[ResidueType, Tuple[Tuple[str, str], ...]] = {
    ResidueType.PRO: (("CD", "N"),),
    ResidueType.HIS: (("CE1", "NE2"),),
    ResidueType.PHE: (("CE2", "CZ"),),
    ResidueType.TYR: (("CE2", "CZ"),),
    ResidueType.TRP: (("NE1", "CE2"), ("CH2", "CZ3")),
}

AROMATIC_RINGS: Dict[ResidueType, Tuple[str, ...]] = {
    ResidueType.PHE: ("CG", "CD1", "CD2", "CE1", "CE2", "CZ"),
    ResidueType.TYR: ("CG", "CD1", "CD2", "CE1", "CE2", "CZ"),
    ResidueType.HIS: ("CG", "ND1", "CD2", "CE1", "NE2"),
    ResidueType.TRP: ("CG", "CD1", "CD2", "NE1", "CE2", "CE3", "CZ2", "CZ3", "CH2"),
}

MAX_PLACED = max(len(BACKBONE_ORDER) + len(side) for side in SIDE_CHAIN_ANCHORS.values())


@dataclass(frozen=True)
class ResidueTemplate:
    residue_type: ResidueType
    placement_order: Tuple[str, ...]
    anchors: Tuple[Tuple[str, Anchors], ...]
    bonds: Tuple[Tuple[AtomRef, AtomRef], ...]
    angles: Tuple[Tuple[AtomRef, AtomRef, AtomRef], ...]
    torsions: Tuple[Tuple[AtomRef, AtomRef, AtomRef, AtomRef], ...]

    @property
    def atom_names(self) -> Tuple[str, ...]:
        """All heavy atoms, CA first."""
        return ("CA",) + self.placement_order

    @property
    def side_chain(self) -> Tuple[str, ...]:
        return self.placement_order[len(BACKBONE_ORDER):]

    def anchors_of(self, atom_name: str) -> Anchors:
        for name, refs in self.anchors:
            if name == atom_name:
                return refs
        raise TemplateLookupError(f"{self.residue_type.value} has no placed atom {atom_name!r}")

    def slot_of(self, atom_name: str) -> int:
        try:
            return self.placement_order.index(atom_name)
        except ValueError:
            raise TemplateLookupError(f"{self.residue_type.value} has no placed atom {atom_name!r}") from None

    def slot_class(self, atom_name: str) -> str:
        """Backbone atoms name their own class; side-chain atoms are grouped by bond depth from CA (SC1, SC2, ...)."""
        if atom_name in BACKBONE_ORDER:
            return atom_name
        depth, name = 0, atom_name
        while name != "CA":
            name = self.anchors_of(name)[0].name
            depth += 1
        return f"SC{depth}"

    def element_of(self, atom_name: str) -> str:
        if atom_name not in self.atom_names:
            raise TemplateLookupError(f"{self.residue_type.value} has no atom {atom_name!r}")
        return element_of(atom_name)


def residue_type_from_code(code: str) -> ResidueType:
    """Map a three-letter residue code to its ResidueType."""
    key = code.strip().upper()
    if key in RESIDUE_ALIASES:
        return RESIDUE_ALIASES[key]
    try:
        return ResidueType(key)
    except ValueError:
        raise UnknownResidueError(f"unknown residue code {code!r}") from None


def is_residue_code(code: str) -> bool:
    key = code.strip().upper()
    return key in RESIDUE_ALIASES or key in ResidueType.__members__


def _derive_angles_and_torsions(bonds: Sequence[Tuple[AtomRef, AtomRef]]):
    """Angles owned by the central atom, torsions owned by the second atom."""
    neighbours: Dict[AtomRef, Set[AtomRef]] = {}

    def link(a: AtomRef, b: AtomRef) -> None:
        neighbours.setdefault(a, set()).add(b)
        neighbours.setdefault(b, set()).add(a)

    for a, b in bonds:
        link(a, b)
    # the incoming peptide bond from the previous residue
    link(AtomRef("C", -1), AtomRef("N"))
    # backbone atoms of the next residue
    link(AtomRef("N", 1), AtomRef("CA", 1))

    angles = []
    for centre in sorted(neighbours):
        if centre.offset != 0:
            continue
        for a, c in combinations(sorted(neighbours[centre]), 2):
            angles.append((a, centre, c))

    torsions = []
    for b in sorted(neighbours):
        if b.offset != 0:
            continue
        for c in sorted(neighbours[b]):
            for a in sorted(neighbours[b] - {c}):
                for d in sorted(neighbours[c] - {b}):
                    if d != a:
                        torsions.append((a, b, c, d))
    return tuple(angles), tuple(torsions)


def _build_template(residue_type: ResidueType) -> ResidueTemplate:
    side = SIDE_CHAIN_ANCHORS[residue_type]
    placement_order = BACKBONE_ORDER + tuple(side)

    anchors: List[Tuple[str, Anchors]] = [(name, BACKBONE_ANCHORS[name]) for name in BACKBONE_ORDER]
    for name, (j, k, l) in side.items():
        anchors.append((name, (AtomRef(j), AtomRef(k), AtomRef(l))))

    bonds: List[Tuple[AtomRef, AtomRef]] = [(AtomRef(a), AtomRef(b)) for a, b in BACKBONE_BONDS]
    bonds.extend((AtomRef(j), AtomRef(name)) for name, (j, _, _) in side.items())
    bonds.extend((AtomRef(a), AtomRef(b)) for a, b in RING_CLOSURES.get(residue_type, ()))
    bonds.append(PEPTIDE_BOND)

    angles, torsions = _derive_angles_and_torsions(bonds)
    return ResidueTemplate(
        residue_type=residue_type,
        placement_order=placement_order,
        anchors=tuple(anchors),
        bonds=tuple(bonds),
        angles=angles,
        torsions=torsions,
    )


@lru_cache(maxsize=None)
def template_for(residue_type: ResidueType) -> ResidueTemplate:
    """Template for a residue type."""
    if not isinstance(residue_type, ResidueType):
        residue_type = residue_type_from_code(str(residue_type))
    return _build_template(residue_type)


def anchors_for(residue_type: ResidueType, atom_name: str) -> Anchors:
    """Anchor atoms (j, k, l) used to place atom_name."""
    return template_for(residue_type).anchors_of(atom_name)


def bond_graph_reference(
    sequence: Sequence[ResidueType],
    chain_ids: Optional[Sequence[str]] = None,
    start_index: int = 0,
) -> Set[Tuple[Tuple[int, str], Tuple[int, str]]]:
    """
    Covalent heavy-atom bonds of a chain built from templates.

    Args:
        sequence: Residue types in order
        chain_ids: Chain of each residue; peptide bonds never cross chains
        start_index: Residue index assigned to the first residue

    Returns:
        Set of edges ((residue index, atom), (residue index, atom)), each sorted
    """
    chain_ids = list(chain_ids) if chain_ids is not None else [""] * len(sequence)
    edges: Set[Tuple[Tuple[int, str], Tuple[int, str]]] = set()
    for position, residue_type in enumerate(sequence):
        template = template_for(residue_type)
        index = start_index + position
        for a, b in template.bonds:
            target = position + b.offset
            if b.offset != 0 and (target >= len(sequence) or chain_ids[target] != chain_ids[position]):
                continue
            edge = tuple(sorted(((index + a.offset, a.name), (index + b.offset, b.name))))
            edges.add(edge)
    return edges

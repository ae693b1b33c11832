"""Residue templates: atom sets, anchors and bond topology."""
from .elements import ELEMENTS, MAX_COVALENT_RADIUS, ElementInfo, element_info, element_of
from .residues import (
    AROMATIC_RINGS,
    MAX_PLACED,
    RESIDUE_TYPES,
    AtomRef,
    ResidueTemplate,
    ResidueType,
    anchors_for,
    bond_graph_reference,
    is_residue_code,
    residue_type_from_code,
    template_for,
)

__all__ = [
    "AROMATIC_RINGS",
    "ELEMENTS",
    "MAX_COVALENT_RADIUS",
    "MAX_PLACED",
    "RESIDUE_TYPES",
    "AtomRef",
    "ElementInfo",
    "ResidueTemplate",
    "ResidueType",
    "anchors_for",
    "bond_graph_reference",
    "element_info",
    "element_of",
    "is_residue_code",
    "residue_type_from_code",
    "template_for",
]

"""Human-readable YAML form of the residue templates."""
from typing import Dict, Iterable, Optional

import yaml

from templates.residues import RESIDUE_TYPES, AtomRef, ResidueTemplate, ResidueType, template_for
from utils.errors import ModelFormatError

TEMPLATE_FORMAT_VERSION = 1


def _refs(items: Iterable[AtomRef]):
    return [str(ref) for ref in items]


def export_templates(residue_types: Optional[Iterable[ResidueType]] = None) -> str:
    """Dump templates as YAML text."""
    residues = {}
    for residue_type in residue_types or RESIDUE_TYPES:
        template = template_for(residue_type)
        residues[residue_type.value] = {
            "placement_order": list(template.placement_order),
            "anchors": {name: _refs(refs) for name, refs in template.anchors},
            "bonds": [_refs(bond) for bond in template.bonds],
            "angles": [_refs(angle) for angle in template.angles],
            "torsions": [_refs(torsion) for torsion in template.torsions],
        }
    document = {"version": TEMPLATE_FORMAT_VERSION, "residues": residues}
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None)


def load_templates(text: str) -> Dict[ResidueType, ResidueTemplate]:
    """Parse YAML text produced by export_templates."""
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ModelFormatError(f"template file is not valid YAML: {e}") from e

    if not isinstance(document, dict) or document.get("version") != TEMPLATE_FORMAT_VERSION:
        raise ModelFormatError("unsupported template file version")

    templates = {}
    for code, entry in document.get("residues", {}).items():
        residue_type = ResidueType(code)
        try:
            templates[residue_type] = ResidueTemplate(
                residue_type=residue_type,
                placement_order=tuple(entry["placement_order"]),
                anchors=tuple(
                    (name, tuple(AtomRef.parse(ref) for ref in refs)) for name, refs in entry["anchors"].items()
                ),
                bonds=tuple(tuple(AtomRef.parse(ref) for ref in bond) for bond in entry["bonds"]),
                angles=tuple(tuple(AtomRef.parse(ref) for ref in angle) for angle in entry["angles"]),
                torsions=tuple(tuple(AtomRef.parse(ref) for ref in torsion) for torsion in entry["torsions"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"malformed template for {code}: {e}") from e
    return templates

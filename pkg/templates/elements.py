"""Element data used for bond inference and interaction detection."""
from dataclasses import dataclass
from typing import Dict

from utils.errors import TemplateLookupError


@dataclass(frozen=True)
class ElementInfo:
    symbol: str
    covalent_radius: float  # Å
    heteroatom: bool


ELEMENTS: Dict[str, ElementInfo] = {
    "H": ElementInfo("H", 0.31, False),
    "C": ElementInfo("C", 0.76, False),
    "N": ElementInfo("N", 0.71, True),
    "O": ElementInfo("O", 0.66, True),
    "S": ElementInfo("S", 1.05, True),
    "P": ElementInfo("P", 1.07, True),
}

MAX_COVALENT_RADIUS = max(e.covalent_radius for e in ELEMENTS.values())


def element_info(symbol: str) -> ElementInfo:
    try:
        return ELEMENTS[symbol.strip().upper()]
    except KeyError:
        raise TemplateLookupError(f"unknown element {symbol!r}") from None


def element_of(atom_name: str) -> str:
    """Element of a template heavy atom: the first letter of its name."""
    name = atom_name.strip().lstrip("0123456789")
    if not name:
        raise TemplateLookupError(f"cannot infer element from atom name {atom_name!r}")
    return name[0].upper()

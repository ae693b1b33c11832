"""
Per-(residue type, atom) statistics of internal coordinates.

Statistics are kept as sums (count, sum of d, sums of sin/cos of theta and
tau, torsion histogram counts) so partial results merge in any grouping.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from templates import RESIDUE_TYPES, ResidueType, template_for
from templates.residues import BACKBONE_ORDER
from utils.errors import CoverageError, ModelFormatError
from zmatrix.frame import ANGLE, BOND, TORSION, ZMatrixFrame

logger = logging.getLogger(__name__)

N_BINS = 36
HIST_EDGES = np.linspace(-np.pi, np.pi, N_BINS + 1)

SlotKey = Tuple[str, str]  # (residue code, atom name)

# pool of every side-chain slot, behind the per-depth classes
SIDE_CHAIN_POOL = "SC"


@dataclass
class SlotAccumulator:
    count: int = 0
    d_sum: float = 0.0
    theta_sin: float = 0.0
    theta_cos: float = 0.0
    tau_sin: float = 0.0
    tau_cos: float = 0.0
    hist: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS, dtype=np.int64))

    def update(self, d: np.ndarray, theta: np.ndarray, tau: np.ndarray) -> None:
        d, theta, tau = np.ravel(d), np.ravel(theta), np.ravel(tau)
        self.count += d.size
        self.d_sum += float(np.sum(d))
        self.theta_sin += float(np.sum(np.sin(theta)))
        self.theta_cos += float(np.sum(np.cos(theta)))
        self.tau_sin += float(np.sum(np.sin(tau)))
        self.tau_cos += float(np.sum(np.cos(tau)))
        self.hist += np.histogram(tau, bins=HIST_EDGES)[0]

    def merge(self, other: "SlotAccumulator") -> None:
        self.count += other.count
        self.d_sum += other.d_sum
        self.theta_sin += other.theta_sin
        self.theta_cos += other.theta_cos
        self.tau_sin += other.tau_sin
        self.tau_cos += other.tau_cos
        self.hist = self.hist + other.hist

    def stats(self) -> "SlotStats":
        return SlotStats(
            bond=self.d_sum / self.count,
            angle=float(np.arctan2(self.theta_sin, self.theta_cos)),
            torsion=float(np.arctan2(self.tau_sin, self.tau_cos)),
            hist=self.hist.copy(),
            count=self.count,
        )


@dataclass
class SlotStats:
    """Arithmetic mean bond, circular mean angle and torsion, torsion histogram."""

    bond: float
    angle: float
    torsion: float
    hist: np.ndarray
    count: int

    @property
    def probabilities(self) -> np.ndarray:
        """Histogram normalised to sum to one; empty histograms stay all zero."""
        total = self.hist.sum()
        return self.hist / total if total else np.zeros(N_BINS)

    def to_dict(self) -> dict:
        return {
            "bond": self.bond,
            "angle": self.angle,
            "torsion": self.torsion,
            "hist": [int(v) for v in self.hist],
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SlotStats":
        try:
            hist = np.array(data["hist"], dtype=np.int64)
            if hist.shape != (N_BINS,):
                raise ValueError(f"histogram needs {N_BINS} bins")
            return cls(float(data["bond"]), float(data["angle"]), float(data["torsion"]), hist, int(data["count"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"malformed slot statistics: {e}") from e


@dataclass
class LookupTables:
    """
    Statistics per (residue code, atom), with statistics pooled per slot class
    across residue types for combinations never observed.

    ``fallback`` maps every template slot without its own entry to the pooled
    class that stands in for it; slots missing from both stay unresolved.
    """

    entries: Dict[SlotKey, SlotStats] = field(default_factory=dict)
    pooled: Dict[str, SlotStats] = field(default_factory=dict)
    fallback: Dict[SlotKey, str] = field(default_factory=dict)

    def lookup(self, residue_type: ResidueType, atom: str, allow_fallback: bool = True) -> SlotStats:
        """
        Raises:
            CoverageError: No statistics, or only pooled ones with fallback disabled
        """
        key = (residue_type.value, atom)
        stats = self.entries.get(key)
        if stats is not None:
            return stats
        if key in self.fallback:
            if allow_fallback:
                return self.pooled[self.fallback[key]]
            raise CoverageError(f"only pooled statistics for residue type {residue_type.value} atom {atom}")
        raise CoverageError(f"no statistics for residue type {residue_type.value} atom {atom}")

    def mean_values(self, residue_type: ResidueType, allow_fallback: bool = True) -> np.ndarray:
        """(d, theta, tau) means for every placement slot of a residue type."""
        order = template_for(residue_type).placement_order
        values = np.zeros((len(order), 3))
        for slot, atom in enumerate(order):
            stats = self.lookup(residue_type, atom, allow_fallback)
            values[slot] = (stats.bond, stats.angle, stats.torsion)
        return values

    def sample_torsion(
        self,
        residue_type: ResidueType,
        atom: str,
        rng: np.random.Generator,
        size: Optional[int] = None,
        allow_fallback: bool = True,
    ):
        """Inverse-CDF draw: bin picked by the histogram CDF, position uniform inside the bin."""
        stats = self.lookup(residue_type, atom, allow_fallback)
        if stats.hist.sum() == 0:
            return stats.torsion if size is None else np.full(size, stats.torsion)
        cdf = np.cumsum(stats.probabilities)
        n = 1 if size is None else size
        bins = np.searchsorted(cdf, rng.random(n), side="right")
        bins = np.minimum(bins, N_BINS - 1)
        draws = HIST_EDGES[bins] + rng.random(n) * (HIST_EDGES[bins + 1] - HIST_EDGES[bins])
        return float(draws[0]) if size is None else draws

    def to_dict(self) -> dict:
        return {
            "entries": {f"{code}:{atom}": s.to_dict() for (code, atom), s in self.entries.items()},
            "pooled": {name: s.to_dict() for name, s in self.pooled.items()},
            "fallback": {f"{code}:{atom}": name for (code, atom), name in sorted(self.fallback.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LookupTables":
        try:
            entries = {}
            for key, value in data["entries"].items():
                code, atom = key.split(":")
                entries[(code, atom)] = SlotStats.from_dict(value)
            pooled = {name: SlotStats.from_dict(value) for name, value in data["pooled"].items()}
            fallback = {}
            for key, name in data["fallback"].items():
                code, atom = key.split(":")
                if name not in pooled:
                    raise ValueError(f"fallback {key} refers to missing pool {name!r}")
                fallback[(code, atom)] = name
        except (KeyError, AttributeError, ValueError) as e:
            raise ModelFormatError(f"malformed lookup tables: {e}") from e
        return cls(entries, pooled, fallback)


def fallback_classes(residue_type: ResidueType, atom: str) -> Tuple[str, ...]:
    """Pooled classes tried in order for a slot without its own statistics."""
    slot_class = template_for(residue_type).slot_class(atom)
    if atom in BACKBONE_ORDER:
        return (slot_class,)
    return (slot_class, SIDE_CHAIN_POOL)


def accumulate_frame(zframe: ZMatrixFrame) -> Dict[SlotKey, SlotAccumulator]:
    """Slot sums of one frame."""
    sums: Dict[SlotKey, SlotAccumulator] = {}
    by_type: Dict[ResidueType, list] = {}
    for row, key in enumerate(zframe.keys):
        by_type.setdefault(key.residue_type, []).append(row)
    for residue_type, rows in by_type.items():
        for slot, atom in enumerate(template_for(residue_type).placement_order):
            selected = [r for r in rows if zframe.mask[r, slot]]
            if not selected:
                continue
            values = zframe.values[selected, slot]
            acc = sums.setdefault((residue_type.value, atom), SlotAccumulator())
            acc.update(values[:, BOND], values[:, ANGLE], values[:, TORSION])
    return sums


def tables_from_accumulators(accumulators: Dict[SlotKey, SlotAccumulator]) -> LookupTables:
    pooled_acc: Dict[str, SlotAccumulator] = {}
    for (code, atom), acc in sorted(accumulators.items()):
        for name in fallback_classes(ResidueType(code), atom):
            pooled_acc.setdefault(name, SlotAccumulator()).merge(acc)
    entries = {key: acc.stats() for key, acc in sorted(accumulators.items()) if acc.count}
    pooled = {name: acc.stats() for name, acc in pooled_acc.items() if acc.count}

    fallback = {}
    unresolved = 0
    for residue_type in RESIDUE_TYPES:
        for atom in template_for(residue_type).placement_order:
            key = (residue_type.value, atom)
            if key in entries:
                continue
            name = next((n for n in fallback_classes(residue_type, atom) if n in pooled), None)
            if name is None:
                unresolved += 1
                continue
            fallback[key] = name
    if unresolved:
        logger.warning("%d template slots have neither statistics nor a pooled fallback", unresolved)
    return LookupTables(entries, pooled, fallback)


def fit_tables(zframes: Iterable[ZMatrixFrame]) -> LookupTables:
    """
    Fit lookup tables from Z-matrix frames.

    Args:
        zframes: Frames extracted from preprocessed ensembles

    Returns:
        Tables with one entry per observed (residue code, atom)
    """
    totals: Dict[SlotKey, SlotAccumulator] = {}
    n_frames = 0
    for zframe in zframes:
        n_frames += 1
        for key, acc in accumulate_frame(zframe).items():
            totals.setdefault(key, SlotAccumulator()).merge(acc)
    tables = tables_from_accumulators(totals)
    logger.info(
        "fitted %d slot entries from %d frames, %d slots resolved by pooled classes",
        len(tables.entries),
        n_frames,
        len(tables.fallback),
    )
    return tables

"""
Structure quality metrics for backmapped frames.

Includes metrics for:
- Coordinate accuracy (RMSD)
- Topology recovery (bond graph edit distance)
- Steric quality (clash ratio)
- Long-range interaction recovery
"""
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from evaluation.bond_graph import exclusion_codes, ged_ratio, infer_bond_graph, reference_graph
from evaluation.interactions import identify_interactions, interaction_scores
from evaluation.neighbors import nonbonded_pairs
from evaluation.runner import FrameRunner
from structure_io.models import AtomKey, Structure
from utils.errors import SkeletonMismatchError

CONTACT_CUTOFF = 5.0  # Å
CLASH_THRESHOLD = 1.2  # Å


def _aligned_keys(reference: Structure, generated: Structure) -> List[AtomKey]:
    keys = reference.evaluated_keys()
    generated_keys = set(generated.evaluated_keys())
    if set(keys) != generated_keys:
        diff = sorted(set(keys) ^ generated_keys)
        position, name = diff[0]
        residues = reference.residues if position < len(reference.residues) else generated.residues
        raise SkeletonMismatchError(f"atom sets differ, first at {residues[position].label} atom {name}")
    for position, (a, b) in enumerate(zip(reference.residues, generated.residues)):
        if (a.chain_id, a.seq_index, a.residue_type) != (b.chain_id, b.seq_index, b.residue_type):
            raise SkeletonMismatchError(f"residue {a.label} does not match {b.label}")
    return keys


def rmsd(reference: Structure, generated: Structure) -> float:
    """
    Root mean square deviation over all atoms of non-terminal residues.

    No superposition: CA positions are shared, so frames are already aligned.
    """
    keys = _aligned_keys(reference, generated)
    if not keys:
        return 0.0
    delta = reference.coordinates(keys) - generated.coordinates(keys)
    return float(np.sqrt(np.mean(np.sum(delta**2, axis=1))))


def clash_ratio_from_coords(
    coords: np.ndarray,
    excluded: Optional[np.ndarray] = None,
    cutoff: float = CONTACT_CUTOFF,
    threshold: float = CLASH_THRESHOLD,
    method: str = "kdtree",
) -> float:
    """Percentage of non-bonded pairs within cutoff that sit closer than threshold."""
    _, _, dist = nonbonded_pairs(coords, cutoff, excluded, method)
    if len(dist) == 0:
        return 0.0
    return 100.0 * int(np.count_nonzero(dist < threshold)) / len(dist)


def clash_ratio(
    structure: Structure,
    cutoff: float = CONTACT_CUTOFF,
    threshold: float = CLASH_THRESHOLD,
    method: str = "kdtree",
) -> float:
    """Clash percentage over the evaluated atoms; 1-2 and 1-3 pairs never count."""
    keys = structure.evaluated_keys()
    coords = structure.coordinates(keys)
    excluded = exclusion_codes(reference_graph(structure), keys)
    return clash_ratio_from_coords(coords, excluded, cutoff, threshold, method)


def _percent_key(frame: Dict[str, float]) -> Dict[str, float]:
    return {("clash_ratio_pct" if key == "clash_ratio" else key): value for key, value in frame.items()}


@dataclass
class MetricsReport:
    rmsd: float
    ged_ratio: float
    clash_ratio: float
    interaction_atom: float
    interaction_pi: float
    frames: List[Dict[str, float]] = field(default_factory=list)
    seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        """JSON layout; the clash ratio is reported in percent as clash_ratio_pct."""
        data = asdict(self)
        data["clash_ratio_pct"] = data.pop("clash_ratio")
        data["frames"] = [_percent_key(frame) for frame in self.frames]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, output_path: str) -> None:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(self.to_json())


FRAME_METRICS = ("rmsd", "ged_ratio", "clash_ratio", "interaction_atom", "interaction_pi")


class StructureMetrics:
    """Metrics comparing backmapped frames with their all-atom references."""

    @staticmethod
    def evaluate_frame(
        reference: Structure,
        generated: Structure,
        tolerance: float = 0.4,
        clash_threshold: float = CLASH_THRESHOLD,
        contact_cutoff: float = CONTACT_CUTOFF,
    ) -> Dict[str, float]:
        """
        Compute every metric for one generated frame.

        Args:
            reference: Preprocessed all-atom frame
            generated: Backmapped frame on the same residues
            tolerance: Bond inference tolerance in Å

        Returns:
            Dictionary keyed by metric name
        """
        atom_score, pi_score = interaction_scores(reference, generated, identify_interactions(reference))
        return {
            "frame": generated.frame_id,
            "rmsd": rmsd(reference, generated),
            "ged_ratio": ged_ratio(infer_bond_graph(generated, tolerance), reference_graph(reference)),
            "clash_ratio": clash_ratio(generated, contact_cutoff, clash_threshold),
            "interaction_atom": atom_score,
            "interaction_pi": pi_score,
        }

    @staticmethod
    def evaluate_ensemble(
        references: Sequence[Structure],
        generated: Sequence[Structure],
        tolerance: float = 0.4,
        clash_threshold: float = CLASH_THRESHOLD,
        contact_cutoff: float = CONTACT_CUTOFF,
        threads: int = 1,
        seed: Optional[int] = None,
    ) -> MetricsReport:
        """
        Evaluate every generated frame against its reference.

        Frames are paired by index (or all against a single reference) and
        evaluated on a FrameRunner; the report lists frames in input order.
        """
        pairs = frame_pairs(references, generated)
        runner = FrameRunner(threads)
        results = runner.run_batch(
            pairs, lambda pair: StructureMetrics.evaluate_frame(pair[0], pair[1], tolerance, clash_threshold, contact_cutoff)
        )
        return StructureMetrics.build_report(results, seed=seed)

    @staticmethod
    def build_report(frame_results: Sequence[Dict[str, float]], seed: Optional[int] = None) -> MetricsReport:
        """Average per-frame results into a report that keeps the per-frame breakdown."""
        means = {
            name: math.fsum(r[name] for r in frame_results) / len(frame_results) if frame_results else 0.0
            for name in FRAME_METRICS
        }
        return MetricsReport(frames=[dict(r) for r in frame_results], seed=seed, **means)

    @staticmethod
    def aggregate_results(results: List[Dict[str, float]]) -> Dict[str, Any]:
        """
        Aggregate per-frame metrics.

        Args:
            results: List of per-frame metric dictionaries

        Returns:
            Aggregated statistics including mean, median, min, max
        """
        if not results:
            return {}

        aggregated = {}
        for metric in FRAME_METRICS:
            values = [r[metric] for r in results if metric in r]
            if values:
                aggregated[metric] = {
                    "mean": float(np.mean(values)),
                    "median": float(np.median(values)),
                    "min": min(values),
                    "max": max(values),
                    "count": len(values),
                }
        return aggregated

    @staticmethod
    def generate_report(results: List[Dict[str, float]], output_path: Optional[str] = None) -> str:
        """
        Plain-text summary of per-frame metrics.

        Args:
            results: List of per-frame metric dictionaries
            output_path: Optional path to save report

        Returns:
            Report text
        """
        aggregated = StructureMetrics.aggregate_results(results)

        report_lines = [
            "=" * 60,
            "BACKMAPPING EVALUATION REPORT",
            "=" * 60,
            f"\nFrames: {len(results)}",
            "\n" + "-" * 60,
            "METRIC SUMMARY",
            "-" * 60,
        ]
        for metric_name, stats in aggregated.items():
            report_lines.append(f"\n{metric_name.upper()}:")
            report_lines.append(f"  Mean:   {stats['mean']:.3f}")
            report_lines.append(f"  Median: {stats['median']:.3f}")
            report_lines.append(f"  Min:    {stats['min']:.3f}")
            report_lines.append(f"  Max:    {stats['max']:.3f}")
        report_lines.append("\n" + "=" * 60)

        report = "\n".join(report_lines)
        if output_path:
            with open(output_path, "w", encoding="utf-8") as f:
                f.write(report)
        return report


def frame_pairs(references: Sequence[Structure], generated: Sequence[Structure]) -> List[Tuple[Structure, Structure]]:
    """Pair frames by index; a single reference frame is compared with every generated frame."""
    if len(references) == 1 and len(generated) > 1:
        return [(references[0], g) for g in generated]
    if len(references) != len(generated):
        raise SkeletonMismatchError(f"{len(references)} reference frames against {len(generated)} generated frames")
    return list(zip(references, generated))

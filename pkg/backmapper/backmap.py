"""CA trace to all-atom structure."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import torch

from backmapper.features import FeatureSpec, featurize_trace
from backmapper.tables import LookupTables
from backmapper.torsion_net import TorsionNet, apply_corrections
from evaluation.runner import FrameRunner
from structure_io.models import CGTrace, Structure
from templates import MAX_PLACED, template_for
from utils.config import DEFAULT_SEED
from utils.errors import UsageError
from zmatrix.frame import TORSION, ZMatrixFrame
from zmatrix.reconstruct import PlacementPlan

logger = logging.getLogger(__name__)

MODES = ("deterministic", "stochastic")


@dataclass
class BackmapModel:
    tables: LookupTables
    net: Optional[TorsionNet] = None
    feature_spec: FeatureSpec = FeatureSpec()
    fit_metadata: dict = field(default_factory=dict)


def table_values(plan: PlacementPlan, tables: LookupTables, allow_fallback: bool = True) -> np.ndarray:
    """Mean (d, theta, tau) of every slot of the plan rows."""
    values = np.zeros((len(plan), MAX_PLACED, 3))
    cache = {}
    for row, key in enumerate(plan.keys):
        if key.residue_type not in cache:
            cache[key.residue_type] = tables.mean_values(key.residue_type, allow_fallback)
        means = cache[key.residue_type]
        values[row, : len(means)] = means
    return values


def sample_values(
    plan: PlacementPlan, tables: LookupTables, rng: np.random.Generator, allow_fallback: bool = True
) -> np.ndarray:
    """Table means with every torsion drawn from its histogram."""
    values = table_values(plan, tables, allow_fallback)
    for row, key in enumerate(plan.keys):
        for slot, atom in enumerate(template_for(key.residue_type).placement_order):
            values[row, slot, TORSION] = tables.sample_torsion(key.residue_type, atom, rng, allow_fallback=allow_fallback)
    return values


def predict_corrections(net: TorsionNet, trace: CGTrace, spec: FeatureSpec) -> np.ndarray:
    features = torch.from_numpy(featurize_trace(trace, spec))
    with torch.no_grad():
        return net.corrections(features).numpy()


def decode(
    trace: CGTrace,
    model: BackmapModel,
    mode: str = "deterministic",
    rng: Optional[np.random.Generator] = None,
    allow_fallback: bool = True,
    plan: Optional[PlacementPlan] = None,
) -> ZMatrixFrame:
    """Z-matrix predicted for the non-terminal residues of a trace."""
    if mode not in MODES:
        raise UsageError(f"unknown mode {mode!r}, expected one of {', '.join(MODES)}")
    plan = plan or PlacementPlan(trace)
    if mode == "stochastic":
        values = sample_values(plan, model.tables, rng or np.random.default_rng(DEFAULT_SEED), allow_fallback)
    else:
        values = table_values(plan, model.tables, allow_fallback)
    if model.net is not None and len(plan):
        values = apply_corrections(values, plan.mask, predict_corrections(model.net, trace, model.feature_spec))
    return ZMatrixFrame(list(plan.keys), values, plan.mask.copy(), trace.frame_id)


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    """Generator for one frame; independent of how frames are scheduled."""
    return np.random.default_rng([seed, frame_index])


def backmap(
    trace: CGTrace,
    model: BackmapModel,
    mode: str = "deterministic",
    seed: int = DEFAULT_SEED,
    allow_fallback: bool = True,
) -> Structure:
    """
    All-atom structure for a CA trace.

    Deterministic mode uses table means (plus network corrections); stochastic
    mode draws torsions from the table histograms with a generator seeded by
    (seed, frame id).

    Raises:
        CoverageError: A residue slot has no statistics
    """
    plan = PlacementPlan(trace)
    zframe = decode(trace, model, mode, frame_rng(seed, trace.frame_id), allow_fallback, plan)
    buffer, _ = plan.place(plan.align(zframe))
    return plan.to_structure(buffer)


def backmap_frames(
    traces: Sequence[CGTrace],
    model: BackmapModel,
    mode: str = "deterministic",
    seed: int = DEFAULT_SEED,
    allow_fallback: bool = True,
    threads: int = 1,
) -> List[Structure]:
    """Backmap every frame, merged in frame order."""
    runner = FrameRunner(max_workers=threads)
    return runner.run_batch(list(traces), lambda trace: backmap(trace, model, mode, seed, allow_fallback))

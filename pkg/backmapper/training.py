"""Training loop for TorsionNet on ground-truth frames."""
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from pydantic import BaseModel, Field
from tqdm import tqdm

from backmapper.backmap import table_values
from backmapper.features import FeatureSpec, featurize_trace
from backmapper.tables import LookupTables
from backmapper.torsion_net import TorsionNet, apply_corrections, correction_gradient
from losses.gradients import ReconTarget
from losses.objectives import LossReport
from losses.weights import LossWeights
from structure_io.models import Structure, cg_map
from utils.config import DEFAULT_SEED
from utils.errors import NonFiniteLossError, UsageError
from utils.tracing import add_trace_event, trace_span

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    epochs: int = Field(200, ge=0)
    learning_rate: float = Field(1e-3, gt=0.0)
    batch_size: int = Field(4, gt=0)
    seed: int = DEFAULT_SEED
    hidden: Tuple[int, ...] = (64, 64)
    weights: LossWeights = Field(default_factory=LossWeights)


@dataclass
class TrainingSample:
    frame_id: int
    target: ReconTarget
    features: torch.Tensor
    base_values: np.ndarray


@dataclass
class TrainingResult:
    net: TorsionNet
    loss_trajectory: List[float] = field(default_factory=list)


def build_samples(
    structures: Sequence[Structure], tables: LookupTables, spec: FeatureSpec, allow_fallback: bool = True
) -> List[TrainingSample]:
    """Precompute targets, features and table values of preprocessed frames."""
    samples = []
    for structure in structures:
        trace = cg_map(structure)
        target = ReconTarget(structure, trace)
        samples.append(
            TrainingSample(
                frame_id=structure.frame_id,
                target=target,
                features=torch.from_numpy(featurize_trace(trace, spec)),
                base_values=table_values(target.plan, tables, allow_fallback),
            )
        )
    return samples


def sample_loss(
    net: TorsionNet, sample: TrainingSample, weights: LossWeights, with_gradient: bool = False
) -> Tuple[LossReport, Optional[torch.Tensor], Optional[np.ndarray]]:
    """
    Loss of one frame under the network's corrections.

    Returns:
        Report, the corrections tensor (attached to the graph) and the
        gradient of the loss with respect to it
    """
    corrections = net.corrections(sample.features)
    mask = sample.target.plan.mask
    values = apply_corrections(sample.base_values, mask, corrections.detach().numpy())
    report, grad = sample.target.evaluate(values, weights, with_gradient=with_gradient)
    if grad is None:
        return report, corrections, None
    return report, corrections, correction_gradient(grad, mask, values)


def mean_recon_loss(net: TorsionNet, samples: Sequence[TrainingSample], weights: LossWeights) -> float:
    with torch.no_grad():
        losses = [sample_loss(net, s, weights)[0].recon for s in samples]
    return math.fsum(losses) / len(losses) if losses else 0.0


def train_torsion_net(
    structures: Sequence[Structure],
    tables: LookupTables,
    config: Optional[TrainConfig] = None,
    spec: FeatureSpec = FeatureSpec(),
    allow_fallback: bool = True,
    show_progress: bool = False,
) -> TrainingResult:
    """
    Fit a TorsionNet with Adam on the reconstruction loss.

    Gradients of the loss with respect to the predicted angles come from the
    analytic loss gradients and are back-propagated through the network.

    Args:
        structures: Preprocessed ground-truth frames
        tables: Lookup tables providing the base values
        config: Epochs, learning rate, batch size, seed, loss weights

    Returns:
        Trained network and mean reconstruction loss per epoch, starting
        with the loss of the initial network

    Raises:
        UsageError: No training frames
        NonFiniteLossError: A frame loss became NaN or infinite
    """
    if not structures:
        raise UsageError("training needs at least one frame")
    config = config or TrainConfig()
    with torch.random.fork_rng():
        torch.manual_seed(config.seed)
        net = TorsionNet(spec, config.hidden)

    samples = build_samples(structures, tables, spec, allow_fallback)
    rng = np.random.default_rng(config.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    trajectory = [mean_recon_loss(net, samples, config.weights)]
    logger.info("training on %d frames, initial mean recon loss %.6f", len(samples), trajectory[0])

    epochs = tqdm(range(config.epochs), desc="train", file=sys.stderr, disable=not show_progress)
    for epoch in epochs:
        with trace_span("train.epoch", {"epoch": epoch}):
            order = rng.permutation(len(samples))
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                optimizer.zero_grad()
                for index in batch:
                    sample = samples[index]
                    report, corrections, grad = sample_loss(net, sample, config.weights, with_gradient=True)
                    if not report.is_finite():
                        raise NonFiniteLossError(
                            f"non-finite loss at epoch {epoch} frame {sample.frame_id}: {report.to_dict()}"
                        )
                    corrections.backward(torch.from_numpy(grad / len(batch)))
                optimizer.step()
            trajectory.append(mean_recon_loss(net, samples, config.weights))
            add_trace_event("epoch.loss", {"recon": trajectory[-1]})
        if show_progress:
            epochs.set_postfix(loss=f"{trajectory[-1]:.4f}")

    logger.info("final mean recon loss %.6f after %d epochs", trajectory[-1], config.epochs)
    return TrainingResult(net, trajectory)

"""Loss weights and the ablation presets."""
from typing import Dict

from pydantic import BaseModel, ConfigDict, Field


class LossWeights(BaseModel):
    """
    Weights of the reconstruction objective.

    recon = gamma * (bond + angle) + delta * torsion + eta * xyz + zeta * steric
    elbo = recon + beta * kl
    """

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(1.0, ge=0.0)
    delta: float = Field(1.0, ge=0.0)
    eta: float = Field(1.0, ge=0.0)
    zeta: float = Field(3.0, ge=0.0)
    beta: float = Field(0.05, ge=0.0)


ABLATIONS: Dict[str, LossWeights] = {
    "full": LossWeights(),
    "no-torsion": LossWeights(delta=0.0),
    "no-xyz": LossWeights(eta=0.0),
    "no-steric": LossWeights(zeta=0.0),
}

"""Small MLP predicting per-residue angle corrections from CA features."""
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from backmapper.features import FeatureSpec
from templates import MAX_PLACED
from zmatrix.frame import ANGLE, TORSION
from zmatrix.reconstruct import C_SLOT, N_SLOT

# one torsion per placement slot, then theta of N and theta of C
N_OUTPUTS = MAX_PLACED + 2
THETA_N_OUTPUT = MAX_PLACED
THETA_C_OUTPUT = MAX_PLACED + 1
NORM_EPS = 1e-12
# corrected backbone angles stay inside [THETA_MIN, THETA_MAX]
THETA_MARGIN = 1e-3
THETA_MIN, THETA_MAX = THETA_MARGIN, np.pi - THETA_MARGIN


class TorsionNet(nn.Module):
    """
    Outputs a unit (sin, cos) pair per predicted angle. The decoded angle is a
    correction added to the lookup-table mean; the output layer starts at
    (0, 1) so an untrained network applies no correction.
    """

    def __init__(self, spec: FeatureSpec = FeatureSpec(), hidden: Sequence[int] = (64, 64)):
        super().__init__()
        self.spec = spec
        self.hidden = tuple(int(h) for h in hidden)

        layers = []
        width = spec.dimension
        for size in self.hidden:
            layers.extend([nn.Linear(width, size), nn.Tanh()])
            width = size
        self.body = nn.Sequential(*layers)
        self.head = nn.Linear(width, 2 * N_OUTPUTS)

        nn.init.zeros_(self.head.weight)
        with torch.no_grad():
            self.head.bias.zero_()
            self.head.bias[1::2] = 1.0
        self.double()

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        raw = self.head(self.body(features)).view(-1, N_OUTPUTS, 2)
        return raw / torch.sqrt((raw**2).sum(dim=-1, keepdim=True) + NORM_EPS)

    def corrections(self, features: torch.Tensor) -> torch.Tensor:
        """Angle corrections in radians, shape (n, N_OUTPUTS)."""
        pairs = self(features)
        return torch.atan2(pairs[..., 0], pairs[..., 1])


def wrap_angle(angle: np.ndarray) -> np.ndarray:
    """Map to (-pi, pi]."""
    wrapped = np.remainder(np.asarray(angle) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped <= -np.pi, np.pi, wrapped)


def apply_corrections(values: np.ndarray, mask: np.ndarray, corrections: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float)
    out[..., TORSION] = np.where(mask, wrap_angle(out[..., TORSION] + corrections[:, :MAX_PLACED]), out[..., TORSION])
    out[:, N_SLOT, ANGLE] = np.clip(out[:, N_SLOT, ANGLE] + corrections[:, THETA_N_OUTPUT], THETA_MIN, THETA_MAX)
    out[:, C_SLOT, ANGLE] = np.clip(out[:, C_SLOT, ANGLE] + corrections[:, THETA_C_OUTPUT], THETA_MIN, THETA_MAX)
    return out


def _inside(theta: np.ndarray) -> np.ndarray:
    return (theta > THETA_MIN) & (theta < THETA_MAX)


def correction_gradient(grad_values: np.ndarray, mask: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Map d loss / d (d, theta, tau) onto the network outputs.

    With the corrected values given, angles held at a clipping bound get no gradient.
    """
    grad = np.zeros((len(grad_values), N_OUTPUTS))
    grad[:, :MAX_PLACED] = grad_values[..., TORSION] * mask
    grad[:, THETA_N_OUTPUT] = grad_values[:, N_SLOT, ANGLE]
    grad[:, THETA_C_OUTPUT] = grad_values[:, C_SLOT, ANGLE]
    if values is not None:
        grad[:, THETA_N_OUTPUT] *= _inside(values[:, N_SLOT, ANGLE])
        grad[:, THETA_C_OUTPUT] *= _inside(values[:, C_SLOT, ANGLE])
    return grad

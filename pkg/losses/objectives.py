"""Loss terms of the reconstruction objective and their gradients."""
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from evaluation.neighbors import nonbonded_pairs
from losses.weights import LossWeights

ANGULAR_EPS = 1e-7
STERIC_CUTOFF = 5.0  # Å
STERIC_THRESHOLD = 2.0  # Å


def _check_lengths(predicted: np.ndarray, target: np.ndarray) -> None:
    if len(predicted) != len(target):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(target)} target")


def angular_loss(predicted: np.ndarray, target: np.ndarray, eps: float = ANGULAR_EPS) -> float:
    """Mean of sqrt(2 - 2 cos(delta) + eps); periodic in 2*pi."""
    predicted, target = np.ravel(predicted), np.ravel(target)
    _check_lengths(predicted, target)
    if predicted.size == 0:
        return 0.0
    return float(np.mean(np.sqrt(2.0 - 2.0 * np.cos(predicted - target) + eps)))


def angular_loss_grad(predicted: np.ndarray, target: np.ndarray, eps: float = ANGULAR_EPS) -> np.ndarray:
    predicted, target = np.asarray(predicted, dtype=float), np.asarray(target, dtype=float)
    if predicted.size == 0:
        return np.zeros_like(predicted)
    delta = predicted - target
    return np.sin(delta) / (np.sqrt(2.0 - 2.0 * np.cos(delta) + eps) * predicted.size)


def bond_loss(predicted: np.ndarray, target: np.ndarray) -> float:
    """Mean squared bond-length error."""
    predicted, target = np.ravel(predicted), np.ravel(target)
    _check_lengths(predicted, target)
    if predicted.size == 0:
        return 0.0
    return float(np.mean((predicted - target) ** 2))


def bond_loss_grad(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    predicted, target = np.asarray(predicted, dtype=float), np.asarray(target, dtype=float)
    if predicted.size == 0:
        return np.zeros_like(predicted)
    return 2.0 * (predicted - target) / predicted.size


def xyz_loss(predicted: np.ndarray, target: np.ndarray) -> float:
    """Mean squared per-atom displacement."""
    predicted = np.asarray(predicted, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 3)
    _check_lengths(predicted, target)
    if len(predicted) == 0:
        return 0.0
    return float(np.mean(np.sum((predicted - target) ** 2, axis=1)))


def xyz_loss_grad(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    predicted = np.asarray(predicted, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 3)
    if len(predicted) == 0:
        return np.zeros_like(predicted)
    return 2.0 * (predicted - target) / len(predicted)


def steric_loss_and_gradient(
    coords: np.ndarray,
    excluded: Optional[np.ndarray] = None,
    cutoff: float = STERIC_CUTOFF,
    threshold: float = STERIC_THRESHOLD,
    method: str = "kdtree",
) -> Tuple[float, np.ndarray]:
    """
    Hinge penalty sum(max(threshold - r, 0)) over non-bonded pairs within cutoff.

    Args:
        coords: Atom positions (n, 3)
        excluded: Pair codes of 1-2 and 1-3 pairs
        method: "kdtree" or "brute"; both give identical values

    Returns:
        Loss value and its gradient with respect to coords
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    grad = np.zeros_like(coords)
    i, j, dist = nonbonded_pairs(coords, cutoff, excluded, method)
    active = dist < threshold
    if not np.any(active):
        return 0.0, grad
    i, j, dist = i[active], j[active], dist[active]
    value = math.fsum((threshold - dist).tolist())

    unit = (coords[i] - coords[j]) / dist[:, None]
    np.add.at(grad, i, -unit)
    np.add.at(grad, j, unit)
    return value, grad


def steric_loss(
    coords: np.ndarray,
    excluded: Optional[np.ndarray] = None,
    cutoff: float = STERIC_CUTOFF,
    threshold: float = STERIC_THRESHOLD,
    method: str = "kdtree",
) -> float:
    return steric_loss_and_gradient(coords, excluded, cutoff, threshold, method)[0]


def kl_gaussian(mu_q: np.ndarray, sigma_q: np.ndarray, mu_p: np.ndarray = 0.0, sigma_p: np.ndarray = 1.0) -> float:
    """
    Closed-form KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2)) for diagonal Gaussians, summed over dimensions.

    Raises:
        ValueError: any standard deviation is not positive
    """
    mu_q, sigma_q = np.asarray(mu_q, dtype=float), np.asarray(sigma_q, dtype=float)
    mu_p, sigma_p = np.broadcast_arrays(np.asarray(mu_p, dtype=float), np.asarray(sigma_p, dtype=float))
    if np.any(sigma_q <= 0.0) or np.any(sigma_p <= 0.0):
        raise ValueError("standard deviations must be positive")
    terms = np.log(sigma_p / sigma_q) + (sigma_q**2 + (mu_q - mu_p) ** 2) / (2.0 * sigma_p**2) - 0.5
    return float(np.sum(terms))


def elbo(recon: float, kl: float, beta: float = 0.05) -> float:
    return recon + beta * kl


@dataclass
class LossReport:
    bond: float
    angle: float
    torsion: float
    xyz: float
    steric: float
    recon: float
    kl: float = 0.0
    elbo: float = 0.0

    @classmethod
    def combine(
        cls, bond: float, angle: float, torsion: float, xyz: float, steric: float, weights: LossWeights, kl: float = 0.0
    ) -> "LossReport":
        recon = weights.gamma * (bond + angle) + weights.delta * torsion + weights.eta * xyz + weights.zeta * steric
        return cls(bond, angle, torsion, xyz, steric, recon, kl, elbo(recon, kl, weights.beta))

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in asdict(self).values())

    def to_dict(self):
        return {f"L_{name}": value for name, value in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

"""
Tests for TorsionNet and its training loop.
"""
import numpy as np
import pytest
import torch

from backmapper import BackmapModel, FeatureSpec, TorsionNet, TrainConfig, backmap, fit_tables, train_torsion_net
from backmapper.torsion_net import (
    N_OUTPUTS,
    THETA_C_OUTPUT,
    THETA_MAX,
    THETA_MIN,
    THETA_N_OUTPUT,
    apply_corrections,
    correction_gradient,
    wrap_angle,
)
from backmapper.training import build_samples, sample_loss
from evaluation.metrics import rmsd
from losses import LossWeights
from peptide_builder import random_conformer
from structure_io import cg_map
from templates import MAX_PLACED
from utils.errors import UsageError
from zmatrix import extract
from zmatrix.frame import ANGLE
from zmatrix.reconstruct import C_SLOT, N_SLOT

SEQUENCE = "GLY SER ALA GLU LYS THR VAL GLY"


@pytest.fixture
def frames():
    return [random_conformer(SEQUENCE, seed=s) for s in range(4)]


@pytest.fixture
def tables(frames):
    return fit_tables(extract(f, cg_map(f)) for f in frames)


def randomised_net(seed=0):
    torch.manual_seed(seed)
    net = TorsionNet(FeatureSpec())
    with torch.no_grad():
        net.head.weight.normal_(0.0, 0.05)
        net.head.bias.normal_(0.0, 0.3)
        net.head.bias[1::2] += 1.0
    return net


class TestTorsionNet:
    """Network outputs."""

    def test_untrained_net_applies_no_correction(self):
        net = TorsionNet()
        features = torch.randn(5, FeatureSpec().dimension, dtype=torch.float64)
        corrections = net.corrections(features)
        assert corrections.shape == (5, N_OUTPUTS)
        assert torch.allclose(corrections, torch.zeros_like(corrections))

    def test_outputs_are_unit_pairs(self):
        net = randomised_net()
        pairs = net(torch.randn(4, FeatureSpec().dimension, dtype=torch.float64))
        norms = pairs.pow(2).sum(dim=-1).sqrt()
        assert torch.allclose(norms, torch.ones_like(norms))

    def test_gradcheck(self):
        net = randomised_net(1)
        features = torch.randn(2, FeatureSpec().dimension, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(net.corrections, (features,))

    def test_untrained_net_matches_tables(self, frames, tables):
        trace = cg_map(frames[0])
        plain = backmap(trace, BackmapModel(tables))
        with_net = backmap(trace, BackmapModel(tables, TorsionNet()))
        keys = plain.evaluated_keys()
        np.testing.assert_allclose(with_net.coordinates(keys), plain.coordinates(keys), atol=1e-12)


def test_wrap_angle():
    np.testing.assert_allclose(wrap_angle(np.array([3 * np.pi / 2, -np.pi, np.pi, 0.1])), [-np.pi / 2, np.pi, np.pi, 0.1])


def test_backbone_angle_corrections_are_clipped():
    values = np.zeros((2, MAX_PLACED, 3))
    values[:, N_SLOT, ANGLE] = 3.0
    values[:, C_SLOT, ANGLE] = 0.1
    mask = np.zeros((2, MAX_PLACED), dtype=bool)
    corrections = np.zeros((2, N_OUTPUTS))
    corrections[0, THETA_N_OUTPUT] = 1.0
    corrections[0, THETA_C_OUTPUT] = -1.0
    corrections[1, THETA_N_OUTPUT] = -0.5
    corrections[1, THETA_C_OUTPUT] = 0.5
    out = apply_corrections(values, mask, corrections)
    assert out[0, N_SLOT, ANGLE] == THETA_MAX == pytest.approx(np.pi - 1e-3)
    assert out[0, C_SLOT, ANGLE] == THETA_MIN == pytest.approx(1e-3)
    assert out[1, N_SLOT, ANGLE] == pytest.approx(2.5)
    assert out[1, C_SLOT, ANGLE] == pytest.approx(0.6)

    grad = correction_gradient(np.ones_like(values), mask, out)
    assert grad[0, THETA_N_OUTPUT] == 0.0
    assert grad[0, THETA_C_OUTPUT] == 0.0
    assert grad[1, THETA_N_OUTPUT] == 1.0
    assert grad[1, THETA_C_OUTPUT] == 1.0


class TestTraining:
    """Loss gradients through the network and the optimisation loop."""

    def test_parameter_gradient_matches_finite_differences(self, frames, tables):
        net = randomised_net(2)
        sample = build_samples(frames[:1], tables, net.spec)[0]
        weights = LossWeights()

        _, corrections, grad = sample_loss(net, sample, weights, with_gradient=True)
        net.zero_grad()
        corrections.backward(torch.from_numpy(grad))
        h = 1e-6
        # sin component of the CB torsion output, and one weight of the theta_N output
        for param, index in [(net.head.bias, (6,)), (net.head.weight, (2 * N_OUTPUTS - 4, 3))]:
            analytic = param.grad[index].item()
            with torch.no_grad():
                param[index] += h
                plus = sample_loss(net, sample, weights)[0].recon
                param[index] -= 2 * h
                minus = sample_loss(net, sample, weights)[0].recon
                param[index] += h
            assert analytic == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-7)

    def test_zero_epochs(self, frames, tables):
        result = train_torsion_net(frames, tables, TrainConfig(epochs=0))
        assert len(result.loss_trajectory) == 1
        head = result.net.head.weight
        assert torch.count_nonzero(head) == 0

    @pytest.mark.slow
    def test_loss_decreases(self, frames, tables):
        config = TrainConfig(epochs=25, learning_rate=1e-2, batch_size=2, seed=3)
        result = train_torsion_net(frames, tables, config)
        assert len(result.loss_trajectory) == 26
        assert result.loss_trajectory[-1] < result.loss_trajectory[0]

    def test_seeded_training_is_repeatable(self, frames, tables):
        config = TrainConfig(epochs=3, learning_rate=1e-2, seed=8)
        a = train_torsion_net(frames, tables, config)
        b = train_torsion_net(frames, tables, config)
        assert a.loss_trajectory == b.loss_trajectory

    def test_no_frames(self, tables):
        with pytest.raises(UsageError, match="at least one frame"):
            train_torsion_net([], tables)

    @pytest.mark.slow
    def test_trained_net_beats_tables(self):
        frames = [random_conformer(SEQUENCE, seed=s) for s in range(10)]
        tables = fit_tables(extract(f, cg_map(f)) for f in frames)
        result = train_torsion_net(frames, tables, TrainConfig(epochs=200, learning_rate=1e-3, seed=11))
        assert result.loss_trajectory[-1] < result.loss_trajectory[0]

        plain = BackmapModel(tables)
        trained = BackmapModel(tables, result.net)
        tables_only = np.mean([rmsd(f, backmap(cg_map(f), plain)) for f in frames])
        with_net = np.mean([rmsd(f, backmap(cg_map(f), trained)) for f in frames])
        assert with_net < tables_only

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)

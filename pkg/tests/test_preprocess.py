"""
Tests for ensemble preprocessing and compactness statistics.
"""
import os

import numpy as np
import pytest

from peptide_builder import build_peptide
from structure_io import (
    Ensemble,
    PreprocessPolicy,
    compactness_stats,
    flag_terminals,
    preprocess,
    radius_of_gyration,
    read_pdb,
)
from utils.errors import ChainTooShortError


@pytest.fixture
def mini_ensemble(test_data_dir):
    return read_pdb(os.path.join(test_data_dir, "mini.pdb"))


class TestPreprocess:
    """Hydrogen removal, pruning, terminals and subsampling."""

    def test_removes_hydrogens_and_oxt(self, mini_ensemble):
        cleaned, log = preprocess(mini_ensemble)
        frame = cleaned.frames[0]
        assert "H" not in frame.residues[0].atoms
        assert "OXT" not in frame.residues[2].atoms
        assert log.hydrogens_removed == 2
        assert log.pruned[("SER", "OXT")] == 1

    def test_input_is_left_untouched(self, mini_ensemble):
        preprocess(mini_ensemble)
        assert "H" in mini_ensemble.frames[0].residues[0].atoms

    def test_terminals_are_flagged(self, mini_ensemble):
        cleaned, log = preprocess(mini_ensemble)
        assert [r.terminal for r in cleaned.frames[1].residues] == [True, False, True]
        assert log.terminal_residues == ["A:GLY1", "A:SER3"]

    def test_idempotent(self, mini_ensemble):
        once, _ = preprocess(mini_ensemble)
        twice, log = preprocess(once)
        assert log.hydrogens_removed == 0
        assert not log.pruned
        assert [f.skeleton() for f in twice.frames] == [f.skeleton() for f in once.frames]

    def test_log_text(self, mini_ensemble):
        _, log = preprocess(mini_ensemble)
        text = log.to_text()
        assert "frames_in 2" in text
        assert "pruned SER:OXT 1" in text
        assert "terminal A:GLY1" in text

    def test_subsampling_respects_cap_and_seed(self):
        frames = [build_peptide("GLY ALA GLY", offset=(float(i), 0.0, 0.0)) for i in range(12)]
        ensemble = Ensemble(frames)
        policy = PreprocessPolicy(frame_cap=5, seed=9)

        first, log_a = preprocess(ensemble, policy)
        second, log_b = preprocess(ensemble, policy)

        assert len(first) == 5
        assert log_a.selected_frames == log_b.selected_frames
        assert log_a.selected_frames == sorted(log_a.selected_frames)
        assert [f.frame_id for f in first.frames] == list(range(5))
        picked = [int(round(f.residues[0].coord("N")[0])) for f in second.frames]
        assert picked == log_a.selected_frames

    def test_no_subsampling_below_cap(self, mini_ensemble):
        _, log = preprocess(mini_ensemble, PreprocessPolicy(frame_cap=500))
        assert log.selected_frames == [0, 1]

    def test_invalid_cap(self):
        with pytest.raises(ValueError):
            PreprocessPolicy(frame_cap=0)


def test_short_chain_is_rejected():
    structure = build_peptide("GLY ALA")
    with pytest.raises(ChainTooShortError):
        flag_terminals(structure)


def test_radius_of_gyration_of_two_points():
    assert radius_of_gyration(np.array([[0.0, 0, 0], [2.0, 0, 0]])) == pytest.approx(1.0)


def test_compactness_stats(mini_ensemble):
    df = compactness_stats([mini_ensemble])
    assert list(df.columns) == ["entry", "chain", "length", "rg_mean"]
    assert len(df) == 1
    assert df.iloc[0]["entry"] == "mini"
    assert df.iloc[0]["length"] == 3
    assert df.iloc[0]["rg_mean"] > 0

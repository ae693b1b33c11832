"""
Tests for model files.
"""
import json

import pytest
import torch

from backmapper import BackmapModel, FeatureSpec, TorsionNet, fit_tables, load_model, save_model
from structure_io import cg_map
from utils.errors import ModelFormatError
from zmatrix import extract


@pytest.fixture
def model(short_peptide):
    torch.manual_seed(0)
    net = TorsionNet(FeatureSpec(window=1), hidden=(8,))
    with torch.no_grad():
        net.head.weight.normal_(0.0, 0.1)
    tables = fit_tables([extract(short_peptide, cg_map(short_peptide))])
    return BackmapModel(tables, net, FeatureSpec(window=1), {"frames": 1, "seed": 123})


def test_round_trip(model, tmp_path):
    path = save_model(tmp_path / "model.json", model)
    loaded = load_model(path)

    assert loaded.feature_spec == model.feature_spec
    assert loaded.fit_metadata == {"frames": 1, "seed": 123}
    assert set(loaded.tables.entries) == set(model.tables.entries)
    features = torch.randn(3, model.feature_spec.dimension, dtype=torch.float64)
    assert torch.equal(loaded.net.corrections(features), model.net.corrections(features))


def test_fallback_flags_are_written(model, tmp_path):
    path = save_model(tmp_path / "model.json", model)
    data = json.loads(path.read_text())
    assert data["version"] == 2
    assert data["tables"]["fallback"]["THR:OG1"] == "SC2"
    assert load_model(path).tables.fallback == model.tables.fallback


def test_tables_only(model, tmp_path):
    path = save_model(tmp_path / "tables.json", BackmapModel(model.tables))
    assert load_model(path).net is None


def test_wrong_version(model, tmp_path):
    path = save_model(tmp_path / "model.json", model)
    data = json.loads(path.read_text())
    data["version"] = 99
    path.write_text(json.dumps(data))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_not_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_missing_file(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.json")

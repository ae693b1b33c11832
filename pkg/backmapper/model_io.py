"""Versioned JSON model files."""
import json
from pathlib import Path
from typing import Union

import torch

from backmapper.backmap import BackmapModel
from backmapper.features import FeatureSpec
from backmapper.tables import LookupTables
from backmapper.torsion_net import TorsionNet
from utils.errors import ModelFormatError

MODEL_FORMAT_VERSION = 2


def model_to_dict(model: BackmapModel) -> dict:
    net = None
    if model.net is not None:
        net = {
            "hidden": list(model.net.hidden),
            "state": {name: tensor.tolist() for name, tensor in model.net.state_dict().items()},
        }
    return {
        "version": MODEL_FORMAT_VERSION,
        "tables": model.tables.to_dict(),
        "net": net,
        "feature_spec": model.feature_spec.to_dict(),
        "fit_metadata": model.fit_metadata,
    }


def model_from_dict(data: dict) -> BackmapModel:
    if not isinstance(data, dict) or data.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version') if isinstance(data, dict) else None!r}")
    try:
        spec = FeatureSpec(**data["feature_spec"])
        tables = LookupTables.from_dict(data["tables"])
        net = None
        if data.get("net"):
            net = TorsionNet(spec, data["net"]["hidden"])
            state = {name: torch.tensor(value, dtype=torch.float64) for name, value in data["net"]["state"].items()}
            net.load_state_dict(state)
        return BackmapModel(tables, net, spec, dict(data.get("fit_metadata") or {}))
    except (KeyError, TypeError, RuntimeError) as e:
        raise ModelFormatError(f"malformed model file: {e}") from e


def save_model(path: Union[str, Path], model: BackmapModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")
    return path


def load_model(path: Union[str, Path]) -> BackmapModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ModelFormatError(f"cannot read model {path}: {e}") from e
    return model_from_dict(data)

"""Ensemble cleanup before fitting or evaluation."""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Counter as CounterType
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from structure_io.models import Ensemble, Residue, Structure
from templates import template_for
from utils.errors import ChainTooShortError

logger = logging.getLogger(__name__)

HYDROGEN_ELEMENTS = ("H", "D")
MIN_CHAIN_LENGTH = 3


class PreprocessPolicy(BaseModel):
    frame_cap: int = Field(500, gt=0)
    seed: int = 123
    remove_hydrogens: bool = True
    prune_non_template: bool = True


@dataclass
class PreprocessLog:
    frames_in: int = 0
    frames_out: int = 0
    seed: int = 0
    selected_frames: List[int] = field(default_factory=list)
    hydrogens_removed: int = 0
    pruned: CounterType[Tuple[str, str]] = field(default_factory=Counter)
    notes: List[str] = field(default_factory=list)
    terminal_residues: List[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"frames_in {self.frames_in}",
            f"frames_out {self.frames_out}",
            f"seed {self.seed}",
            f"selected_frames {' '.join(str(i) for i in self.selected_frames)}",
            f"hydrogens_removed {self.hydrogens_removed}",
        ]
        for (resname, atom), count in sorted(self.pruned.items()):
            lines.append(f"pruned {resname}:{atom} {count}")
        lines.extend(self.notes)
        for label in self.terminal_residues:
            lines.append(f"terminal {label}")
        return "\n".join(lines) + "\n"


def flag_terminals(structure: Structure) -> List[str]:
    """
    Mark the first and last residue of every chain as terminal.

    Raises:
        ChainTooShortError: A chain has fewer than three residues
    """
    labels = []
    for chain_id, residues in structure.chains().items():
        if len(residues) < MIN_CHAIN_LENGTH:
            raise ChainTooShortError(f"chain {chain_id or '_'} has {len(residues)} residues, at least 3 are needed")
        for position, residue in enumerate(residues):
            residue.terminal = position in (0, len(residues) - 1)
            if residue.terminal:
                labels.append(residue.label)
    return labels


def _clean_residue(residue: Residue, policy: PreprocessPolicy, log: PreprocessLog, count: bool) -> None:
    allowed = set(template_for(residue.residue_type).atom_names)
    kept = {}
    for name, atom in residue.atoms.items():
        if policy.remove_hydrogens and atom.element in HYDROGEN_ELEMENTS:
            if count:
                log.hydrogens_removed += 1
            continue
        if policy.prune_non_template and name not in allowed:
            if count:
                log.pruned[(residue.resname, name)] += 1
            continue
        kept[name] = atom
    residue.atoms = kept


def preprocess(ensemble: Ensemble, policy: Optional[PreprocessPolicy] = None) -> Tuple[Ensemble, PreprocessLog]:
    """
    Remove hydrogens, prune non-template atoms, flag terminals and subsample frames.

    Counts in the log refer to the first frame; every frame shares its skeleton.
    Applying the function to its own output removes nothing further.

    Args:
        ensemble: Parsed ensemble; left untouched
        policy: Cleanup policy (defaults: cap 500 frames)

    Returns:
        Cleaned ensemble and its log
    """
    policy = policy or PreprocessPolicy()
    log = PreprocessLog(frames_in=len(ensemble.frames), seed=policy.seed, notes=list(ensemble.notes))

    indices = np.arange(len(ensemble.frames))
    if len(indices) > policy.frame_cap:
        rng = np.random.default_rng(policy.seed)
        indices = np.sort(rng.choice(len(indices), size=policy.frame_cap, replace=False))
        logger.info("subsampled %d of %d frames (seed %d)", policy.frame_cap, log.frames_in, policy.seed)

    frames = []
    for new_id, index in enumerate(indices):
        frame = ensemble.frames[int(index)].copy()
        frame.frame_id = new_id
        for residue in frame.residues:
            _clean_residue(residue, policy, log, count=(new_id == 0))
        terminals = flag_terminals(frame)
        if new_id == 0:
            log.terminal_residues = terminals
        frames.append(frame)

    log.frames_out = len(frames)
    log.selected_frames = [int(i) for i in indices]
    if log.pruned:
        logger.info("pruned %d non-template atoms", sum(log.pruned.values()))
    return Ensemble(frames=frames, entry_id=ensemble.entry_id, notes=list(ensemble.notes)), log

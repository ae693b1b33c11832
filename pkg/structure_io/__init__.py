"""Structure input/output: PDB files, preprocessing, fetching and CA mapping."""
from .compactness import compactness_stats, radius_of_gyration
from .fetch import EnsembleFetcher, fetch_entry, validate_entry_id
from .models import Atom, AtomKey, CGTrace, Ensemble, Residue, Structure, cg_map, terminal_mask
from .pdb import parse_pdb, read_pdb, write_pdb, write_pdb_file
from .preprocess import PreprocessLog, PreprocessPolicy, flag_terminals, preprocess

__all__ = [
    "Atom",
    "AtomKey",
    "CGTrace",
    "Ensemble",
    "EnsembleFetcher",
    "PreprocessLog",
    "PreprocessPolicy",
    "Residue",
    "Structure",
    "cg_map",
    "compactness_stats",
    "fetch_entry",
    "flag_terminals",
    "parse_pdb",
    "preprocess",
    "radius_of_gyration",
    "read_pdb",
    "terminal_mask",
    "validate_entry_id",
    "write_pdb",
    "write_pdb_file",
]

"""Shared pytest fixtures for all tests"""
import os
import sys

import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from peptide_builder import build_peptide  # noqa: E402

MIXED_SEQUENCE = "GLY SER ALA GLU LYS PHE THR LEU VAL ASP ASN GLN ARG MET CYS TYR ILE HIS TRP PRO TPO SEP GLY"


@pytest.fixture(scope="session")
def test_data_dir():
    """Directory for test fixtures"""
    return os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture
def mixed_helix():
    """Helix covering every residue type the builder supports."""
    return build_peptide(MIXED_SEQUENCE)


@pytest.fixture
def glu_helix():
    return build_peptide(["GLU"] * 20)


@pytest.fixture
def short_peptide():
    return build_peptide("GLY SER PHE GLU ALA")

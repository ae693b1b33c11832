"""
Tests for residue templates and anchor tables.
"""
import networkx as nx
import pytest

from templates import (
    RESIDUE_TYPES,
    AtomRef,
    ResidueType,
    anchors_for,
    bond_graph_reference,
    element_info,
    residue_type_from_code,
    template_for,
)
from templates.io import export_templates, load_templates
from utils.errors import TemplateLookupError, UnknownResidueError
from zmatrix.reconstruct import placement_schedule


class TestResidueCodes:
    """Residue code lookup."""

    def test_standard_and_phosphorylated_codes(self):
        assert residue_type_from_code("GLU") is ResidueType.GLU
        assert residue_type_from_code("tpo") is ResidueType.TPO
        assert residue_type_from_code("SPO") is ResidueType.SEP
        assert residue_type_from_code("SEP") is ResidueType.SEP

    def test_unknown_code_is_rejected(self):
        with pytest.raises(UnknownResidueError, match="XYZ"):
            residue_type_from_code("XYZ")

    def test_twenty_two_types(self):
        assert len(RESIDUE_TYPES) == 22


class TestTemplates:
    """Template contents and anchors."""

    def test_glu_placement_order(self):
        template = template_for(ResidueType.GLU)
        assert template.placement_order == ("O", "N", "C", "CB", "CG", "CD", "OE1", "OE2")

    def test_glu_anchors(self):
        assert anchors_for(ResidueType.GLU, "CB") == (AtomRef("CA"), AtomRef("C"), AtomRef("N"))
        assert anchors_for(ResidueType.GLU, "CG") == (AtomRef("CB"), AtomRef("CA"), AtomRef("C"))
        assert anchors_for(ResidueType.GLU, "OE1") == (AtomRef("CD"), AtomRef("CG"), AtomRef("CB"))
        assert anchors_for(ResidueType.GLU, "N") == (AtomRef("CA"), AtomRef("CA", -1), AtomRef("CA", 1))
        assert anchors_for(ResidueType.GLU, "C") == (AtomRef("CA"), AtomRef("CA", 1), AtomRef("CA", -1))
        assert anchors_for(ResidueType.GLU, "O") == (AtomRef("C"), AtomRef("CA"), AtomRef("N"))

    def test_gly_has_backbone_only(self):
        assert template_for(ResidueType.GLY).placement_order == ("O", "N", "C")

    def test_unknown_atom_lookup_fails(self):
        with pytest.raises(TemplateLookupError):
            anchors_for(ResidueType.GLY, "CB")

    def test_trp_is_the_largest_template(self):
        sizes = {t: len(template_for(t).placement_order) for t in RESIDUE_TYPES}
        assert max(sizes.values()) == 13
        assert sizes[ResidueType.TRP] == 13

    @pytest.mark.parametrize(
        "residue_type,atom,expected",
        [
            (ResidueType.GLU, "N", "N"),
            (ResidueType.GLU, "O", "O"),
            (ResidueType.ALA, "CB", "SC1"),
            (ResidueType.THR, "OG1", "SC2"),
            (ResidueType.TRP, "NE1", "SC4"),
            (ResidueType.TRP, "CH2", "SC6"),
            (ResidueType.ARG, "NH2", "SC6"),
            (ResidueType.TPO, "O3P", "SC4"),
        ],
    )
    def test_slot_class(self, residue_type, atom, expected):
        assert template_for(residue_type).slot_class(atom) == expected

    @pytest.mark.parametrize("residue_type", RESIDUE_TYPES)
    def test_every_atom_is_placeable_in_schedule_order(self, residue_type):
        template = template_for(residue_type)
        schedule = placement_schedule([residue_type])
        placed = {"CA"}
        for slot in schedule:
            if slot >= len(template.placement_order):
                continue
            atom = template.placement_order[slot]
            for ref in template.anchors_of(atom):
                assert ref.offset != 0 and ref.name == "CA" or ref.name in placed
            placed.add(atom)
        assert placed == set(template.atom_names)

    @pytest.mark.parametrize("residue_type", RESIDUE_TYPES)
    def test_topology_references_only_local_atoms(self, residue_type):
        template = template_for(residue_type)
        allowed = set(template.atom_names)
        for group in template.bonds + template.angles + template.torsions:
            for ref in group:
                if ref.offset == 0:
                    assert ref.name in allowed
                else:
                    assert abs(ref.offset) == 1 and ref.name in ("N", "CA", "C", "O")


class TestBondGraphReference:
    """Reference covalent topology."""

    def test_single_glu_edges(self):
        edges = bond_graph_reference([ResidueType.GLU])
        # N-CA, CA-C, C-O, CA-CB, CB-CG, CG-CD, CD-OE1, CD-OE2
        assert len(edges) == 8
        assert ((0, "CD"), (0, "OE1")) in edges

    def test_peptide_bond_between_neighbours(self):
        edges = bond_graph_reference([ResidueType.GLY, ResidueType.GLY])
        assert ((0, "C"), (1, "N")) in edges
        assert len(edges) == 3 + 3 + 1

    def test_no_peptide_bond_across_chains(self):
        edges = bond_graph_reference([ResidueType.GLY, ResidueType.GLY], chain_ids=["A", "B"])
        assert ((0, "C"), (1, "N")) not in edges

    def test_ring_closures(self):
        phe = bond_graph_reference([ResidueType.PHE])
        assert ((0, "CE2"), (0, "CZ")) in phe
        pro = bond_graph_reference([ResidueType.PRO])
        assert ((0, "CD"), (0, "N")) in pro
        graph = nx.Graph(list(bond_graph_reference([ResidueType.TRP])))
        assert len(nx.cycle_basis(graph)) == 2

    def test_invariant_under_index_shift(self):
        sequence = [ResidueType.SER, ResidueType.TRP, ResidueType.GLU]
        a = nx.Graph(list(bond_graph_reference(sequence)))
        b = nx.Graph(list(bond_graph_reference(sequence, start_index=40)))
        assert nx.is_isomorphic(a, b)
        assert ((40, "C"), (41, "N")) in bond_graph_reference(sequence, start_index=40)


def test_element_info():
    assert element_info("C").covalent_radius == pytest.approx(0.76)
    assert element_info("o").heteroatom
    with pytest.raises(TemplateLookupError):
        element_info("Xx")


def test_yaml_round_trip():
    loaded = load_templates(export_templates())
    assert set(loaded) == set(RESIDUE_TYPES)
    for residue_type in RESIDUE_TYPES:
        assert loaded[residue_type] == template_for(residue_type)

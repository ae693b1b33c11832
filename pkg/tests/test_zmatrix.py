"""
Tests for Z-matrix extraction, text format and reconstruction.
"""
import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from evaluation.metrics import rmsd
from peptide_builder import build_peptide, join_chains, random_conformer
from structure_io import cg_map
from templates import ResidueType, template_for
from utils.errors import MissingAtomError, MissingRowsError, ModelFormatError, SkeletonMismatchError
from zmatrix import (
    ANGLE,
    BOND,
    TORSION,
    PlacementPlan,
    ZMatrixFrame,
    extract,
    placement_schedule,
    read_zmatrix,
    reconstruct_frame,
    reconstruct_with_jacobian,
    write_zmatrix,
)
from zmatrix.reconstruct import N_SLOT


class TestExtract:
    """Measuring internal coordinates."""

    def test_terminal_residues_have_no_rows(self, short_peptide):
        zframe = extract(short_peptide, cg_map(short_peptide))
        assert [k.seq_index for k in zframe.keys] == [2, 3, 4]

    def test_rows_follow_template_order(self, short_peptide):
        zframe = extract(short_peptide, cg_map(short_peptide))
        rows = [row for row in zframe.rows() if row.seq_index == 4]
        assert [row.atom for row in rows] == list(template_for(ResidueType.GLU).placement_order)
        cb = next(row for row in rows if row.atom == "CB")
        assert cb.d == pytest.approx(1.53)
        assert cb.theta == pytest.approx(np.deg2rad(110.5))

    def test_angles_in_range(self, mixed_helix):
        zframe = extract(mixed_helix, cg_map(mixed_helix))
        theta = zframe.values[..., ANGLE][zframe.mask]
        tau = zframe.values[..., TORSION][zframe.mask]
        assert np.all((theta >= 0) & (theta <= np.pi))
        assert np.all((tau > -np.pi) & (tau <= np.pi))
        assert np.all(zframe.values[..., BOND][zframe.mask] > 1.0)

    def test_missing_atom(self, short_peptide):
        del short_peptide.residues[2].atoms["CB"]
        with pytest.raises(MissingAtomError, match="CB"):
            extract(short_peptide, cg_map(build_peptide("GLY SER PHE GLU ALA")))

    def test_mismatched_trace(self, short_peptide):
        other = cg_map(build_peptide("GLY SER ALA GLU ALA"))
        with pytest.raises(SkeletonMismatchError):
            extract(short_peptide, other)

    def test_invariant_under_rigid_motion(self, mixed_helix):
        zframe = extract(mixed_helix, cg_map(mixed_helix))
        rotation = Rotation.random(random_state=4).as_matrix()
        translation = np.array([-12.0, 4.5, 30.0])
        moved = mixed_helix.copy()
        for residue in moved.residues:
            for atom in residue.atoms.values():
                atom.coord = rotation @ atom.coord + translation
        moved_zframe = extract(moved, cg_map(moved))

        mask = zframe.mask
        np.testing.assert_array_equal(moved_zframe.mask, mask)
        np.testing.assert_allclose(moved_zframe.values[..., :2][mask], zframe.values[..., :2][mask], atol=1e-9)
        delta = moved_zframe.values[..., TORSION][mask] - zframe.values[..., TORSION][mask]
        np.testing.assert_allclose(np.cos(delta), 1.0, atol=1e-9)


class TestReconstruct:
    """Placing atoms back from internal coordinates."""

    def test_round_trip_recovers_structure(self, mixed_helix):
        trace = cg_map(mixed_helix)
        rebuilt = reconstruct_frame(trace, extract(mixed_helix, trace))
        assert rmsd(mixed_helix, rebuilt) < 1e-4

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_round_trip_on_random_conformers(self, seed):
        structure = random_conformer("ALA SER LEU LYS GLU VAL THR ASP ARG GLN", seed=seed)
        trace = cg_map(structure)
        rebuilt = reconstruct_frame(trace, extract(structure, trace))
        assert rmsd(structure, rebuilt) < 1e-4

    def test_two_chains(self):
        a = build_peptide("GLY ALA SER GLY", chain_id="A")
        b = build_peptide("GLY LEU GLU GLY", chain_id="B", offset=(25.0, 0.0, 0.0))
        structure = join_chains(a, b)
        for residue, terminal in zip(structure.residues, cg_map(structure).terminal):
            residue.terminal = bool(terminal)
        trace = cg_map(structure)
        rebuilt = reconstruct_frame(trace, extract(structure, trace))
        assert rmsd(structure, rebuilt) < 1e-4
        assert [r.terminal for r in rebuilt.residues] == [True, False, False, True] * 2

    def test_terminal_residues_keep_only_ca(self, short_peptide):
        trace = cg_map(short_peptide)
        rebuilt = reconstruct_frame(trace, extract(short_peptide, trace))
        assert list(rebuilt.residues[0].atoms) == ["CA"]
        assert list(rebuilt.residues[2].atoms)[:4] == ["N", "CA", "C", "O"]

    def test_commutes_with_rigid_motion(self, mixed_helix):
        trace = cg_map(mixed_helix)
        zframe = extract(mixed_helix, trace)
        rebuilt = reconstruct_frame(trace, zframe)
        keys = rebuilt.evaluated_keys()
        expected = rebuilt.coordinates(keys)

        rng = np.random.default_rng(9)
        for rotation in Rotation.random(100, random_state=9).as_matrix():
            translation = rng.uniform(-20.0, 20.0, 3)
            moved = reconstruct_frame(trace.transformed(rotation, translation), zframe)
            np.testing.assert_allclose(moved.coordinates(keys), expected @ rotation.T + translation, atol=1e-6)

    def test_cb_torsion_moves_only_its_side_chain(self, mixed_helix):
        trace = cg_map(mixed_helix)
        zframe = extract(mixed_helix, trace)
        row = next(i for i, key in enumerate(zframe.keys) if key.residue_type is ResidueType.GLU)
        template = template_for(ResidueType.GLU)
        changed = zframe.with_values(zframe.values)
        changed.values[row, template.placement_order.index("CB"), TORSION] += 0.3

        before = reconstruct_frame(trace, zframe)
        after = reconstruct_frame(trace, changed)
        position = next(p for p, r in enumerate(before.residues) if r.seq_index == zframe.keys[row].seq_index)
        side_chain = set(template.atom_names) - {"N", "CA", "C", "O"}
        for key in before.evaluated_keys():
            if key[0] == position and key[1] in side_chain:
                assert not np.allclose(after.residues[position].coord(key[1]), before.residues[position].coord(key[1]))
            else:
                np.testing.assert_array_equal(after.residues[key[0]].coord(key[1]), before.residues[key[0]].coord(key[1]))

    def test_ca_positions_are_untouched(self, short_peptide):
        trace = cg_map(short_peptide)
        rebuilt = reconstruct_frame(trace, extract(short_peptide, trace))
        np.testing.assert_array_equal(cg_map(rebuilt).coords, trace.coords)

    def test_missing_rows(self, short_peptide):
        trace = cg_map(short_peptide)
        zframe = extract(short_peptide, trace)
        partial = ZMatrixFrame(zframe.keys[:2], zframe.values[:2], zframe.mask[:2])
        with pytest.raises(MissingRowsError, match="GLU4"):
            reconstruct_frame(trace, partial)

    def test_missing_atom_row(self, short_peptide):
        trace = cg_map(short_peptide)
        zframe = extract(short_peptide, trace)
        zframe.mask[1, 4] = False
        with pytest.raises(MissingRowsError, match="CG"):
            reconstruct_frame(trace, zframe)


class TestSchedule:
    def test_glycine_only_needs_backbone_passes(self):
        assert len(placement_schedule([ResidueType.GLY] * 4)) == 3

    def test_nitrogen_first(self):
        schedule = placement_schedule([ResidueType.GLU, ResidueType.GLY])
        assert schedule[0] == N_SLOT
        assert len(schedule) == 3 + 5

    def test_plan_rows(self, short_peptide):
        plan = PlacementPlan(cg_map(short_peptide))
        assert len(plan) == 3
        assert plan.mask.sum() == len(template_for(ResidueType.SER).placement_order) + len(
            template_for(ResidueType.PHE).placement_order
        ) + len(template_for(ResidueType.GLU).placement_order)


class TestZMatrixText:
    """Columnar text form."""

    def test_round_trip(self, short_peptide):
        trace = cg_map(short_peptide)
        zframe = extract(short_peptide, trace)
        zframe.frame_id = 4

        frames = read_zmatrix(write_zmatrix([zframe, zframe]), trace)

        assert [f.frame_id for f in frames] == [4, 4]
        np.testing.assert_allclose(frames[0].values, zframe.values, atol=1e-6)
        np.testing.assert_array_equal(frames[1].mask, zframe.mask)

    def test_row_layout(self, short_peptide):
        text = extract(short_peptide, cg_map(short_peptide)).to_text()
        lines = text.splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == "# frame 0"
        fields = lines[2].split()
        assert fields[:6] == ["A", "2", "O", "C", "CA", "N"]
        assert len(fields) == 9

    def test_anchors_must_match_template(self, short_peptide):
        trace = cg_map(short_peptide)
        text = extract(short_peptide, trace).to_text().replace(" O C CA N ", " O C CA CB ", 1)
        with pytest.raises(ModelFormatError):
            read_zmatrix(text, trace)

    def test_unknown_residue_row(self, short_peptide):
        trace = cg_map(short_peptide)
        text = extract(short_peptide, trace).to_text() + "A 99 N CA CA-1 CA+1 1.3 2.0 3.0\n"
        with pytest.raises(SkeletonMismatchError):
            read_zmatrix(text, trace)

    def test_wrong_column_count(self, short_peptide):
        trace = cg_map(short_peptide)
        with pytest.raises(ModelFormatError):
            read_zmatrix("A 2 N CA\n", trace)


class TestJacobian:
    """Placement Jacobian against finite differences."""

    def test_matches_finite_differences(self, short_peptide):
        trace = cg_map(short_peptide)
        zframe = extract(short_peptide, trace)
        plan = PlacementPlan(trace)
        _, jacobian = reconstruct_with_jacobian(trace, zframe, plan)
        base = plan.align(zframe)
        h = 1e-6

        rng = np.random.default_rng(0)
        for _ in range(12):
            row = int(rng.integers(len(plan)))
            slot = int(rng.choice(np.flatnonzero(plan.mask[row])))
            component = int(rng.integers(3))
            plus, minus = base.copy(), base.copy()
            plus[row, slot, component] += h
            minus[row, slot, component] -= h
            numeric = (plan.place(plus)[0] - plan.place(minus)[0]) / (2 * h)
            numeric = np.nan_to_num(numeric[plan.positions, 1:])
            np.testing.assert_allclose(jacobian.column(row, slot, component), numeric, atol=1e-5)

    def test_pullback_is_transpose(self, short_peptide):
        trace = cg_map(short_peptide)
        _, jacobian = reconstruct_with_jacobian(trace, extract(short_peptide, trace))
        rng = np.random.default_rng(1)
        upstream = rng.normal(size=jacobian.d_coords.shape[:2] + (3,)) * jacobian.mask[:, :, None]
        grad = jacobian.pullback(upstream)
        row, slot, component = 1, 3, 2
        assert grad[row, slot, component] == pytest.approx(np.sum(jacobian.column(row, slot, component) * upstream))

import numpy as np
import pytest
from scipy import stats

from neurograph.bands import BAND_NAMES
from neurograph.layout import (
    ElectrodeOrdering,
    LayoutError,
    apply_ordering,
    distance_ordering,
    head_mask,
    identity_ordering,
    idw_weights,
    load_montage,
    make_montage,
    pixel_grid,
    random_ordering,
    render_topography,
    stack_bands,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="module")
def montage():
    return load_montage()


class TestMontage:
    def test_packaged_montage_has_32_unit_electrodes(self, montage):
        assert montage.n_electrodes == 32
        np.testing.assert_allclose(np.linalg.norm(montage.pos3d, axis=1), 1.0, atol=1e-6)

    def test_planar_positions_inside_unit_disk(self, montage):
        assert np.all(np.linalg.norm(montage.pos2d, axis=1) < 1.0)

    def test_hemisphere_tags_match_lateral_sign(self, montage):
        for name, pos, hemi in zip(montage.names, montage.pos3d, montage.hemisphere):
            if hemi == "left":
                assert pos[0] < 0, name
            elif hemi == "right":
                assert pos[0] > 0, name
            else:
                assert pos[0] == 0, name

    def test_montage_file_parse_errors(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("A 0.0 1.0 0.0\n")
        with pytest.raises(LayoutError, match="expected"):
            load_montage(bad)

    def test_montage_roundtrip_from_file(self, tmp_path, montage):
        path = tmp_path / "m.txt"
        rows = ["# comment"]
        for name, pos, hemi in zip(montage.names, montage.pos3d, montage.hemisphere):
            rows.append(f"{name} {pos[0]:.6f} {pos[1]:.6f} {pos[2]:.6f} {hemi}")
        path.write_text("\n".join(rows))
        again = load_montage(path)
        assert again.names == montage.names
        np.testing.assert_allclose(again.pos3d, montage.pos3d, atol=2e-6)


class TestDistanceOrdering:
    def test_forced_order_on_four_electrode_toy(self):
        z = np.sqrt(1 - 0.25 - 0.49)
        toy = make_montage(
            ["Lf", "Lb", "Rb", "Rf"],
            np.array(
                [[-0.5, 0.7, z], [-0.5, -0.7, z], [0.5, -0.7, z], [0.5, 0.7, z]]
            ),
        )
        order = distance_ordering(toy)
        assert [toy.names[i] for i in order.perm] == ["Lf", "Lb", "Rb", "Rf"]

    def test_full_montage_gives_permutation(self, montage):
        order = distance_ordering(montage)
        assert sorted(order.perm) == list(range(32))

    def test_starts_left_anterior_ends_midline(self, montage):
        order = distance_ordering(montage)
        names = [montage.names[i] for i in order.perm]
        assert names[0] == "Fp1"
        midline = [n for n, h in zip(montage.names, montage.hemisphere) if h == "midline"]
        assert names[-len(midline) :] == ["Fz", "Cz", "Pz", "Oz"]

    def test_right_hemisphere_resumes_posterior(self, montage):
        order = distance_ordering(montage)
        names = [montage.names[i] for i in order.perm]
        lefts = {n for n, h in zip(montage.names, montage.hemisphere) if h == "left"}
        first_right = next(n for n in names if n not in lefts)
        assert first_right == "O2"

    def test_equidistant_tie_breaks_on_label(self):
        # La and Lb mirror each other through the start electrode's plane,
        # hence are exactly equidistant from it; the smaller label must win.
        a = unit([-0.435, 0.9, 0.0])
        b = unit([-0.6, 0.5, +0.624])
        c = unit([-0.6, 0.5, -0.624])
        toy = make_montage(["Start", "Lb", "La"], np.array([a, b, c]))
        order = distance_ordering(toy)
        assert [toy.names[i] for i in order.perm] == ["Start", "La", "Lb"]

    def test_invariant_to_storage_order(self, montage):
        rng = np.random.default_rng(0)
        shuffle = rng.permutation(32)
        shuffled = make_montage(
            [montage.names[i] for i in shuffle],
            montage.pos3d[shuffle],
            hemisphere=[montage.hemisphere[i] for i in shuffle],
        )
        base = [montage.names[i] for i in distance_ordering(montage).perm]
        other = [shuffled.names[i] for i in distance_ordering(shuffled).perm]
        assert base == other

    def test_no_left_hemisphere_rejected(self):
        toy = make_montage(["Ra", "Rb"], np.array([unit([0.5, 0.5, 0.7]), unit([0.5, -0.5, 0.7])]))
        with pytest.raises(LayoutError, match="left"):
            distance_ordering(toy)


class TestRandomOrdering:
    def test_deterministic_per_seed(self):
        assert random_ordering(32, 5).perm == random_ordering(32, 5).perm

    def test_single_electrode_identity(self):
        assert random_ordering(1, 0).perm == (0,)

    def test_uniform_over_permutations(self):
        from itertools import permutations

        table = {p: 0 for p in permutations(range(5))}
        for seed in range(1, 3001):
            table[random_ordering(5, seed).perm] += 1
        counts = np.array(list(table.values()))
        expected = 3000 / 120
        chi2 = np.sum((counts - expected) ** 2 / expected)
        p_value = stats.chi2.sf(chi2, df=119)
        assert p_value > 0.01


class TestApplyOrdering:
    def test_identity_leaves_matrix_unchanged(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((6, 6))
        np.testing.assert_array_equal(apply_ordering(m, identity_ordering(6)), m)

    def test_inverse_restores_original(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((8, 8))
        order = random_ordering(8, 3)
        np.testing.assert_array_equal(
            apply_ordering(apply_ordering(m, order), order.inverse()), m
        )

    def test_group_action_composition(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((7, 7))
        o1, o2 = random_ordering(7, 4), random_ordering(7, 5)
        composed = ElectrodeOrdering(
            perm=tuple(o1.perm[p] for p in o2.perm), method="composed"
        )
        np.testing.assert_array_equal(
            apply_ordering(apply_ordering(m, o1), o2), apply_ordering(m, composed)
        )

    def test_symmetry_eigenvalues_trace_preserved(self):
        rng = np.random.default_rng(4)
        for seed in range(10):
            a = rng.standard_normal((8, 8))
            sym = (a + a.T) / 2
            order = random_ordering(8, seed)
            out = apply_ordering(sym, order)
            np.testing.assert_array_equal(out, out.T)
            # conjugation permutes the diagonal, so its multiset is exactly
            # preserved; the trace sum can differ in the last ulp
            np.testing.assert_array_equal(np.sort(np.diag(out)), np.sort(np.diag(sym)))
            assert np.trace(out) == pytest.approx(np.trace(sym), abs=1e-12)
            np.testing.assert_allclose(
                np.sort(np.linalg.eigvalsh(out)), np.sort(np.linalg.eigvalsh(sym)), atol=1e-9
            )

    def test_size_mismatch_rejected(self):
        with pytest.raises(LayoutError, match="mismatch"):
            apply_ordering(np.zeros((4, 4)), identity_ordering(5))


class TestRenderTopography:
    def test_constant_values_give_constant_head(self, montage):
        img = render_topography(np.full(32, 2.5), montage)
        mask = head_mask(32)
        np.testing.assert_allclose(img[mask], 2.5, rtol=1e-12)
        assert np.all(img[~mask] == 0.0)

    def test_zero_values_give_zero_image(self, montage):
        assert np.all(render_topography(np.zeros(32), montage) == 0.0)

    def test_out_of_head_exactly_zero(self, montage):
        rng = np.random.default_rng(5)
        img = render_topography(rng.standard_normal(32), montage)
        assert np.abs(img[~head_mask(32)]).sum() == 0.0

    def test_exact_at_electrode_positions(self, montage):
        rng = np.random.default_rng(6)
        values = rng.standard_normal(32)
        w = idw_weights(montage.pos2d, montage.pos2d)
        np.testing.assert_allclose(w @ values, values, atol=1e-12)

    def test_single_source_decays_along_rays(self, montage):
        # Monotone decay holds out to the nearest other electrode; beyond it
        # the inverse-distance weights of the zero-valued nodes take over.
        values = np.zeros(32)
        src = montage.names.index("Cz")
        values[src] = 1.0
        field = lambda pts: idw_weights(pts, montage.pos2d) @ values
        origin = montage.pos2d[src]
        others = np.delete(montage.pos2d, src, axis=0)
        nearest = np.min(np.linalg.norm(others - origin, axis=1))
        rng = np.random.default_rng(7)
        for _ in range(10):
            direction = rng.standard_normal(2)
            direction /= np.linalg.norm(direction)
            radii = np.linspace(0.02, 0.8 * nearest, 12)
            pts = origin + radii[:, np.newaxis] * direction
            vals = field(pts)
            assert np.all(np.diff(vals) < 0)

    def test_linearity_in_values(self, montage):
        rng = np.random.default_rng(8)
        v, w = rng.standard_normal(32), rng.standard_normal(32)
        lhs = render_topography(1.7 * v - 0.3 * w, montage)
        rhs = 1.7 * render_topography(v, montage) - 0.3 * render_topography(w, montage)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_duplicate_positions_rejected(self):
        pos = np.array([unit([-0.5, 0.5, 0.7]), unit([-0.5, 0.5, 0.7]), unit([0.5, 0.5, 0.7])])
        toy = make_montage(["A", "B", "C"], pos)
        with pytest.raises(LayoutError, match="same location"):
            render_topography(np.ones(3), toy)

    def test_wrong_value_count_rejected(self, montage):
        with pytest.raises(LayoutError, match="one value per electrode"):
            render_topography(np.ones(31), montage)

    def test_nonfinite_rejected(self, montage):
        values = np.ones(32)
        values[3] = np.nan
        with pytest.raises(LayoutError, match="finite"):
            render_topography(values, montage)

    def test_pixel_grid_geometry(self):
        grid = pixel_grid(32)
        assert grid.shape == (32, 32, 2)
        assert grid[0, 0, 1] > 0  # top row is the +y side
        assert grid[0, 0, 0] < 0  # left column is the -x side


class TestStackBands:
    def test_constant_planes_stack_in_order(self):
        planes = [np.full((32, 32), k) for k in range(10)]
        tensor = stack_bands(planes)
        for k in range(10):
            np.testing.assert_array_equal(tensor[:, :, k], planes[k])

    def test_dict_input_normalizes_band_order(self):
        rng = np.random.default_rng(9)
        planes = {name: rng.standard_normal((32, 32)) for name in BAND_NAMES}
        shuffled = {name: planes[name] for name in reversed(BAND_NAMES)}
        np.testing.assert_array_equal(stack_bands(planes), stack_bands(shuffled))

    def test_wrong_plane_count_rejected(self):
        with pytest.raises(LayoutError, match="expected 10"):
            stack_bands([np.zeros((32, 32))] * 9)

    def test_wrong_plane_shape_rejected(self):
        planes = [np.zeros((32, 32))] * 9 + [np.zeros((16, 16))]
        with pytest.raises(LayoutError, match="shape"):
            stack_bands(planes)

    def test_missing_band_rejected(self):
        planes = {name: np.zeros((32, 32)) for name in BAND_NAMES[:-1]}
        with pytest.raises(LayoutError, match="missing"):
            stack_bands(planes)

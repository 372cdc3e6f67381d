import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blime import (
    InputError,
    InterpretableInstance,
    grid_segment,
    load_segment_map,
    reconstruct,
    reconstruct_batch,
    recover_masks,
    tokenize,
)

from conftest import make_test_image


class TestGridSegment:
    def test_even_quadrants(self):
        img = make_test_image(4, 4)
        seg = grid_segment(img, 2, 2)
        expected = np.array(
            [[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]]
        )
        np.testing.assert_array_equal(seg.labels, expected)

    def test_remainder_first_split(self):
        # width 5 into 2 columns: first column takes the extra pixel.
        img = make_test_image(4, 5)
        seg = grid_segment(img, 1, 2)
        np.testing.assert_array_equal(seg.labels[0], [0, 0, 0, 1, 1])

    def test_eight_superpixels(self):
        seg = grid_segment(make_test_image(), 2, 4)
        assert seg.m == 8

    def test_grid_too_large_rejected(self):
        with pytest.raises(InputError):
            grid_segment(make_test_image(4, 4), 5, 1)

    def test_single_cell_rejected(self):
        with pytest.raises(InputError):
            grid_segment(make_test_image(), 1, 1)


class TestSegmentMapFiles:
    def test_round_trip(self, tmp_path):
        img = make_test_image(3, 4)
        labels = np.array([[0, 0, 1, 1], [0, 2, 2, 1], [3, 3, 2, 1]])
        path = tmp_path / "seg.csv"
        path.write_text("\n".join(",".join(map(str, r)) for r in labels))
        seg = load_segment_map(str(path), img)
        np.testing.assert_array_equal(seg.labels, labels)
        assert seg.m == 4

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "seg.csv"
        path.write_text("0,1\n1,0\n")
        with pytest.raises(InputError, match="2x2.*3x4"):
            load_segment_map(str(path), make_test_image(3, 4))

    def test_non_contiguous_labels_name_a_cell(self, tmp_path):
        path = tmp_path / "seg.csv"
        path.write_text("0,0\n0,2\n")
        with pytest.raises(InputError, match="label 1 never"):
            load_segment_map(str(path), make_test_image(2, 2))

    def test_malformed_cell_named(self, tmp_path):
        path = tmp_path / "seg.csv"
        path.write_text("0,x\n1,0\n")
        with pytest.raises(InputError, match="row 0, column 1"):
            load_segment_map(str(path), make_test_image(2, 2))


class TestTokenize:
    def test_type_deduplication(self):
        tm = tokenize("good movie good")
        assert tm.tokens == ("good", "movie")
        assert tm.m == 2
        assert len(tm.occurrences[0]) == 2

    def test_case_folding(self):
        assert tokenize("Good good", lowercase=True).m == 1
        assert tokenize("Good good", lowercase=False).m == 2

    def test_punctuation_splits(self):
        assert tokenize("a-b").tokens == ("a", "b")

    def test_empty_document_rejected(self):
        with pytest.raises(InputError):
            tokenize("... !!!")

    def test_occurrences_cover_every_appearance(self):
        text = "to be or not to be"
        tm = tokenize(text)
        spans = [s for group in tm.occurrences for s in group]
        assert sorted(text[a:b].lower() for a, b in spans) == sorted(text.split())


class TestReconstructImage:
    def test_identity_mask_is_bit_exact(self, interp, image):
        out = reconstruct(interp, np.ones(interp.m))
        assert out.dtype == np.uint8
        np.testing.assert_array_equal(out, image)

    def test_all_zeros_is_mean_fill(self, interp, image):
        out = reconstruct(interp, np.zeros(interp.m))
        labels = interp.components.labels
        for j in range(interp.m):
            sel = labels == j
            expected = np.floor(image[sel].mean(axis=0) + 0.5).astype(np.uint8)
            assert (out[sel] == expected).all()

    def test_reconstruction_is_deterministic(self, interp):
        mask = np.array([1, 0, 0, 1, 1, 0, 1, 0])
        a = reconstruct(interp, mask)
        b = reconstruct(interp, mask)
        np.testing.assert_array_equal(a, b)

    def test_mean_preservation_within_one_level(self, interp, image):
        out = reconstruct(interp, np.zeros(interp.m))
        labels = interp.components.labels
        for j in range(interp.m):
            sel = labels == j
            drift = np.abs(
                out[sel].mean(axis=0) - image[sel].mean(axis=0)
            )
            assert drift.max() <= 1.0

    def test_fixed_colour_baseline(self, image):
        from blime import grid_segment

        interp = InterpretableInstance(
            image, grid_segment(image, 2, 2), baseline=(10, 20, 30)
        )
        out = reconstruct(interp, np.array([0, 1, 1, 1]))
        sel = interp.components.labels == 0
        assert (out[sel] == np.array([10, 20, 30], dtype=np.uint8)).all()

    def test_mask_length_checked(self, interp):
        with pytest.raises(InputError):
            reconstruct(interp, np.ones(interp.m + 1))

    @given(st.integers(0, 2**8 - 1))
    @settings(max_examples=40, deadline=None)
    def test_recover_inverts_reconstruct(self, bits):
        image = make_test_image(16, 16, seed=9)
        interp = InterpretableInstance(image, grid_segment(image, 2, 4))
        mask = np.array([(bits >> j) & 1 for j in range(8)], dtype=np.int8)
        rec = reconstruct(interp, mask)
        np.testing.assert_array_equal(recover_masks(interp, rec)[0], mask)

    def test_foreign_image_rejected(self, interp):
        foreign = make_test_image(seed=123)
        with pytest.raises(InputError, match="not a masked variant"):
            recover_masks(interp, foreign)

    def test_batch_matches_singles(self, interp):
        rng = np.random.default_rng(3)
        masks = (rng.random((6, interp.m)) < 0.5).astype(np.int8)
        batch = reconstruct_batch(interp, masks)
        for i in range(6):
            np.testing.assert_array_equal(batch[i], reconstruct(interp, masks[i]))


class TestReconstructText:
    def _interp(self, text="good bad good"):
        return InterpretableInstance(text, tokenize(text))

    def test_identity_mask_is_exact(self):
        text = "Great film  with\tgreat acting"
        interp = InterpretableInstance(text, tokenize(text))
        assert reconstruct(interp, np.ones(interp.m)) == text

    def test_deletion_of_all_occurrences(self):
        interp = self._interp()
        # component 0 is "good"
        assert reconstruct(interp, np.array([0, 1])) == "bad"

    def test_whitespace_collapse(self):
        interp = self._interp("good movie good")
        assert reconstruct(interp, np.array([1, 0])) == "good good"

    def test_recover_masks_text(self):
        interp = self._interp("one two three four")
        mask = np.array([1, 0, 1, 0])
        doc = reconstruct(interp, mask)
        np.testing.assert_array_equal(recover_masks(interp, [doc])[0], mask)

    def test_foreign_text_rejected(self):
        interp = self._interp()
        with pytest.raises(InputError, match="not a masked variant"):
            recover_masks(interp, ["entirely different words"])


class TestValidation:
    def test_token_map_must_match_document(self):
        tm = tokenize("aaa bbb")
        with pytest.raises(InputError):
            InterpretableInstance("xxx yyy", tm)

    def test_segment_map_must_match_image(self):
        img = make_test_image(8, 8)
        seg = grid_segment(img, 2, 2)
        with pytest.raises(InputError):
            InterpretableInstance(make_test_image(9, 8), seg)

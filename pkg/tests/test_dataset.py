import json
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from travkit.dataset import (
    AnnotationJob,
    annotate_frame,
    list_frames,
    point_label_baseline,
    run_job,
    to_grayscale,
)
from travkit.errors import EmptyDatasetError, InvalidParameterError, ProtocolError
from travkit.fixtures import expected_labels, simulate_fixtures
from travkit.fusion import ClassPolicy, load_label
from travkit.geometry import PixelPoints, load_camera, load_trajectory
from travkit.protocol import (
    FixturePromptSegmenter,
    FixtureSemanticSegmenter,
    SubprocessPromptSegmenter,
    SubprocessSemanticSegmenter,
)

from oracles import disc_count_oracle

MOCK = str(Path(__file__).parent / "mock_adapter.py")


@pytest.fixture(scope="module")
def fixture_tree(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixture")
    return simulate_fixtures(out)


def make_job(fixture_tree, workspace, **overrides) -> AnnotationJob:
    policy = ClassPolicy.from_dict(json.loads(fixture_tree["policy"].read_text()))
    kwargs = dict(
        frames=list_frames(fixture_tree["frames"]),
        trajectory=load_trajectory(fixture_tree["trajectory"]),
        camera=load_camera(fixture_tree["camera"]),
        prompt_segmenter=FixturePromptSegmenter(fixture_tree["adapters"]),
        semantic_segmenter=FixtureSemanticSegmenter(fixture_tree["adapters"]),
        policy=policy,
        workspace=workspace,
    )
    kwargs.update(overrides)
    return AnnotationJob(**kwargs)


class TestPointLabelBaseline:
    def test_disc_pixel_count(self):
        footsteps = PixelPoints(np.array([[100.0, 100.0]]))
        out = point_label_baseline(footsteps, 30.0, (200, 200))
        count = int(out.sum())
        assert count == disc_count_oracle((100.0, 100.0), 30.0, 200, 200)
        assert 2773 <= count <= 2885  # pi * 30^2 with rasterization slack

    def test_radius_zero_marks_single_pixels(self):
        footsteps = PixelPoints(np.array([[10.4, 20.7], [30.0, 5.5]]))
        out = point_label_baseline(footsteps, 0.0, (64, 64))
        assert out.sum() == 2
        assert out[20, 10] == 1.0 and out[5, 30] == 1.0

    def test_empty_footsteps(self):
        out = point_label_baseline(PixelPoints(np.empty((0, 2))), 30.0, (64, 64))
        assert out.sum() == 0

    def test_discs_clipped_at_border(self):
        footsteps = PixelPoints(np.array([[0.0, 0.0]]))
        out = point_label_baseline(footsteps, 10.0, (64, 64))
        assert int(out.sum()) == disc_count_oracle((0.0, 0.0), 10.0, 64, 64)

    def test_matches_oracle_subpixel_centers(self, rng):
        for _ in range(20):
            u, v = rng.uniform(0, 40), rng.uniform(0, 30)
            r = float(rng.uniform(0.5, 8.0))
            out = point_label_baseline(PixelPoints(np.array([[u, v]])), r, (40, 30))
            assert int(out.sum()) == disc_count_oracle((u, v), r, 40, 30)

    def test_negative_radius_rejected(self):
        with pytest.raises(InvalidParameterError):
            point_label_baseline(PixelPoints(np.array([[1.0, 1.0]])), -1.0, (8, 8))


class TestGrayscale:
    def test_luma_coefficients(self, tmp_path):
        rgb = np.zeros((2, 3, 3), dtype=np.uint8)
        rgb[0, 0] = (255, 0, 0)
        rgb[0, 1] = (0, 255, 0)
        rgb[0, 2] = (0, 0, 255)
        rgb[1, 0] = (255, 255, 255)
        path = tmp_path / "img.png"
        Image.fromarray(rgb, mode="RGB").save(path)
        gray = to_grayscale(path)
        assert gray[0, 0] == round(0.299 * 255)
        assert gray[0, 1] == round(0.587 * 255)
        assert gray[0, 2] == round(0.114 * 255)
        assert gray[1, 0] == 255


class TestAnnotateFrame:
    def test_fixture_frame_matches_expected(self, fixture_tree, tmp_path):
        job = make_job(fixture_tree, tmp_path)
        expected = expected_labels()
        for i in (0, 3, 7):
            result = annotate_frame(job, i)
            assert result is not None
            np.testing.assert_array_equal(result.label, expected[i])
            assert len(result.prompts) == 3

    def test_skip_when_no_footstep_projects(self, fixture_tree, tmp_path):
        # horizon so short that only the frame's own pose (behind the near
        # plane) is in the window
        job = make_job(fixture_tree, tmp_path, horizon=0.2)
        assert annotate_frame(job, 0) is None

    def test_skip_when_area_filter_eats_everything(self, fixture_tree, tmp_path):
        job = make_job(fixture_tree, tmp_path, min_area_fraction=0.9)
        assert annotate_frame(job, 0) is None

    def test_per_frame_independence(self, fixture_tree, tmp_path):
        job = make_job(fixture_tree, tmp_path)
        a = annotate_frame(job, 4)
        # annotate other frames in between
        annotate_frame(job, 0)
        annotate_frame(job, 9)
        b = annotate_frame(job, 4)
        np.testing.assert_array_equal(a.label, b.label)
        assert a.prompts == b.prompts


class TestRunJob:
    def test_manifest_and_split(self, fixture_tree, tmp_path):
        job = make_job(fixture_tree, tmp_path / "out")
        manifest = run_job(job, tmp_path / "out", seed=42)
        assert manifest["counts"] == {"frames": 10, "tuples": 10, "skipped": 0}
        assert len(manifest["train"]) == 9
        assert len(manifest["val"]) == 1
        assert sorted(manifest["train"] + manifest["val"]) == list(range(10))

    def test_byte_identical_rerun(self, fixture_tree, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_job(make_job(fixture_tree, out1), out1, seed=42)
        run_job(make_job(fixture_tree, out2), out2, seed=42)
        m1 = (out1 / "manifest.json").read_bytes()
        m2 = (out2 / "manifest.json").read_bytes()
        assert m1 == m2
        for p1 in sorted((out1 / "labels").iterdir()):
            p2 = out2 / "labels" / p1.name
            assert p1.read_bytes() == p2.read_bytes()

    def test_split_depends_on_seed(self, fixture_tree, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        m1 = run_job(make_job(fixture_tree, out1), out1, seed=1)
        m2 = run_job(make_job(fixture_tree, out2), out2, seed=2)
        assert m1["val"] != m2["val"]

    def test_threaded_run_matches_serial(self, fixture_tree, tmp_path):
        out1, out2 = tmp_path / "serial", tmp_path / "threaded"
        run_job(make_job(fixture_tree, out1), out1, seed=42, jobs=1)
        run_job(make_job(fixture_tree, out2), out2, seed=42, jobs=4)
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_all_skips_is_empty_dataset_error(self, fixture_tree, tmp_path):
        job = make_job(fixture_tree, tmp_path / "out", horizon=0.2)
        with pytest.raises(EmptyDatasetError):
            run_job(job, tmp_path / "out")

    def test_labels_decode_to_annotation_values(self, fixture_tree, tmp_path):
        out = tmp_path / "out"
        manifest = run_job(make_job(fixture_tree, out), out, seed=42)
        expected = expected_labels()
        for entry in manifest["tuples"]:
            label = load_label(out / entry["label"])
            np.testing.assert_array_equal(label, expected[entry["frame_index"]])


class TestSubprocessProtocol:
    def _mask_dir(self, tmp_path):
        d = tmp_path / "adapter_out"
        d.mkdir()
        m = np.zeros((8, 8), dtype=np.uint8)
        m[2:6, 2:6] = 255
        Image.fromarray(m, mode="L").save(d / "mask0.png")
        Image.fromarray(255 - m, mode="L").save(d / "mask1.png")
        return d

    def test_prompt_round_trip(self, tmp_path):
        d = self._mask_dir(tmp_path)
        seg = SubprocessPromptSegmenter([sys.executable, MOCK, "prompt", str(d)])
        try:
            proposals = seg.segment(
                "unused.png", PixelPoints(np.array([[3.0, 3.0]])), frame_index=5
            )
            assert len(proposals) == 2
            assert proposals.scores == [0.9, 0.9]
            assert proposals.masks[0][3, 3]
        finally:
            seg.close()

    def test_semantic_round_trip(self, tmp_path):
        d = tmp_path / "sem"
        d.mkdir()
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(d / "semantic.png")
        (d / "vocabulary.json").write_text(json.dumps({"0": "background"}))
        seg = SubprocessSemanticSegmenter([sys.executable, MOCK, "semantic", str(d)])
        try:
            semantic = seg.segment("unused.png", frame_index=2)
            assert semantic.vocabulary == {0: "background"}
        finally:
            seg.close()

    def test_id_mismatch_rejected(self, tmp_path):
        seg = SubprocessPromptSegmenter([sys.executable, MOCK, "bad-id"])
        try:
            with pytest.raises(ProtocolError):
                seg.segment("x.png", PixelPoints(np.array([[0.0, 0.0]])), frame_index=1)
        finally:
            seg.close()

    def test_error_response_raised(self, tmp_path):
        seg = SubprocessPromptSegmenter([sys.executable, MOCK, "error"])
        try:
            with pytest.raises(ProtocolError, match="synthetic failure"):
                seg.segment("x.png", PixelPoints(np.array([[0.0, 0.0]])), frame_index=1)
        finally:
            seg.close()

    def test_garbage_response_raised(self, tmp_path):
        seg = SubprocessPromptSegmenter([sys.executable, MOCK, "garbage"])
        try:
            with pytest.raises(ProtocolError, match="invalid JSON"):
                seg.segment("x.png", PixelPoints(np.array([[0.0, 0.0]])), frame_index=1)
        finally:
            seg.close()

    def test_missing_fixture_frame(self, tmp_path):
        seg = FixturePromptSegmenter(tmp_path)
        with pytest.raises(ProtocolError):
            seg.segment("x.png", PixelPoints(np.array([[0.0, 0.0]])), frame_index=0)

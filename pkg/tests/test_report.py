import numpy as np
import pytest
from PIL import Image

from ovdprobe.boxes import BBox
from ovdprobe.evaluation import EvalResult, heatmap
from ovdprobe.report import emit_tables, render_heatmap


def result(model, prompt, dataset="ds", auprc=0.5, ap=0.25, ar=0.3, tp=4, fp=2, fn=1):
    return EvalResult(
        model_name=model,
        prompt_id=prompt,
        dataset_id=dataset,
        auprc=auprc,
        ap_50_95=ap,
        ar_50_95=ar,
        tp=tp,
        fp=fp,
        fn=fn,
    )


def grid_of(samples, width=20, height=16):
    return heatmap(samples, width=width, height=height)


class TestTables:
    def full_grid(self):
        return [
            result(f"model{m}", f"p{p}", auprc=0.1 * m + 0.01 * p)
            for m in range(5)
            for p in range(1, 6)
        ]

    def test_one_row_per_model_prompt_pair(self, tmp_path):
        csv_path, txt_path = emit_tables(self.full_grid(), tmp_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "model,prompt,dataset,auprc,ap_50_95,ar_50_95,tp,fp,fn"
        assert len(lines) == 1 + 25
        txt_lines = txt_path.read_text().splitlines()
        assert len(txt_lines) == 2 + 25  # header, rule, rows

    def test_emission_is_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        results = self.full_grid()
        emit_tables(results, a)
        emit_tables(list(reversed(results)), b)
        assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
        assert (a / "results.txt").read_bytes() == (b / "results.txt").read_bytes()

    def test_csv_floats_survive_round_trip(self, tmp_path):
        value = 1 / 3
        csv_path, _ = emit_tables([result("m", "p1", auprc=value)], tmp_path)
        row = csv_path.read_text().splitlines()[1].split(",")
        assert float(row[3]) == value

    def test_rows_sorted_by_model_prompt_dataset(self, tmp_path):
        results = [result("b", "p1"), result("a", "p2"), result("a", "p1")]
        csv_path, _ = emit_tables(results, tmp_path)
        keys = [tuple(line.split(",")[:2]) for line in csv_path.read_text().splitlines()[1:]]
        assert keys == [("a", "p1"), ("a", "p2"), ("b", "p1")]

    def test_txt_aligned_and_dashed(self, tmp_path):
        _, txt_path = emit_tables([result("a_long_model_name", "p1")], tmp_path)
        lines = txt_path.read_text().splitlines()
        assert set(lines[1]) == {"-", " "}
        assert lines[0].startswith("model")
        assert "0.5000" in lines[2]

    def test_empty_results_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no results"):
            emit_tables([], tmp_path)


class TestRecallHeatmap:
    def test_ramp_recomputable_from_recall(self, tmp_path, rng):
        samples = []
        for _ in range(30):
            x0 = int(rng.integers(0, 12))
            y0 = int(rng.integers(0, 10))
            samples.append(
                (BBox(x0, y0, x0 + 5, y0 + 4), bool(rng.integers(0, 2)))
            )
        grid = grid_of(samples)
        path = tmp_path / "recall.png"
        render_heatmap(grid, path, mode="recall")
        rgba = np.asarray(Image.open(path))
        recall = grid.recall
        defined = ~np.isnan(recall)
        expected_r = np.rint(255 * (1.0 - np.nan_to_num(recall))).astype(np.uint8)
        expected_g = np.rint(255 * np.nan_to_num(recall)).astype(np.uint8)
        assert np.array_equal(rgba[defined, 0], expected_r[defined])
        assert np.array_equal(rgba[defined, 1], expected_g[defined])

    def test_uncovered_pixels_transparent(self, tmp_path):
        grid = grid_of([(BBox(2, 2, 6, 6), True)])
        path = tmp_path / "recall.png"
        render_heatmap(grid, path, mode="recall")
        rgba = np.asarray(Image.open(path))
        assert rgba[0, 0, 3] == 0
        assert rgba[3, 3, 3] == 255

    def test_full_recall_is_green_zero_is_red(self, tmp_path):
        grid = grid_of([(BBox(0, 0, 4, 4), True), (BBox(10, 10, 14, 14), False)])
        path = tmp_path / "recall.png"
        render_heatmap(grid, path, mode="recall")
        rgba = np.asarray(Image.open(path))
        assert tuple(rgba[1, 1]) == (0, 255, 0, 255)
        assert tuple(rgba[11, 11]) == (255, 0, 0, 255)

    def test_metadata_written(self, tmp_path):
        grid = grid_of([(BBox(0, 0, 4, 4), True)])
        path = tmp_path / "recall.png"
        meta = render_heatmap(grid, path, mode="recall")
        assert meta["mode"] == "recall"
        assert path.with_suffix(".json").exists()


class TestFnCountHeatmap:
    def test_max_count_reported_and_saturated(self, tmp_path):
        b = BBox(3, 3, 8, 8)
        grid = grid_of([(b, False), (b, False), (b, False), (BBox(0, 0, 2, 2), False)])
        path = tmp_path / "fn.png"
        meta = render_heatmap(grid, path, mode="fn_count")
        assert meta["max_count"] == 3
        rgba = np.asarray(Image.open(path))
        assert tuple(rgba[5, 5]) == (255, 0, 0, 255)  # saturated red at the max
        assert tuple(rgba[15, 15]) == (255, 255, 255, 255)  # zero count is white

    def test_all_zero_counts_render_white(self, tmp_path):
        grid = grid_of([(BBox(0, 0, 4, 4), True)])  # only TP, no FN anywhere
        path = tmp_path / "fn.png"
        meta = render_heatmap(grid, path, mode="fn_count")
        assert meta["max_count"] == 0
        rgba = np.asarray(Image.open(path))
        assert np.all(rgba[..., :3] == 255)

    def test_unknown_mode_rejected(self, tmp_path):
        grid = grid_of([(BBox(0, 0, 4, 4), True)])
        with pytest.raises(ValueError, match="unknown heatmap mode"):
            render_heatmap(grid, tmp_path / "x.png", mode="sepia")

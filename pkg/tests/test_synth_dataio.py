import json

import numpy as np
import pytest

from npclust.dataio import (
    iris,
    read_datasets,
    read_labels,
    read_points,
    read_result,
    write_datasets,
    write_labels,
    write_points,
    write_result,
)
from npclust.dpmeans import dpmeans_objective, run_dpmeans
from npclust.synth import MixtureSpec, gen_gaussian_mixture, gen_hdp_benchmark, three_gaussians


class TestSynth:
    @pytest.mark.parametrize("layout", ["line", "triangle"])
    def test_three_gaussians(self, layout):
        ds = three_gaussians(0, layout=layout)
        assert ds.points.shape == (300, 2)
        assert np.bincount(ds.labels).tolist() == [100, 100, 100]
        centres = np.array([ds.points[ds.labels == c].mean(0) for c in range(3)])
        gaps = np.linalg.norm(centres[:, None] - centres[None], axis=2)
        expected = [8.0, 8.0, 8.0] if layout == "triangle" else [8.0, 16.0, 8.0]
        # each gap is a difference of two means with standard error sqrt(2/100)
        assert np.allclose(gaps[np.triu_indices(3, 1)], expected, atol=4 * np.sqrt(2 / 100) * np.sqrt(2))

    def test_bad_layout(self):
        with pytest.raises(ValueError):
            three_gaussians(0, layout="square")

    def test_mixture_moments(self):
        ds = gen_gaussian_mixture(MixtureSpec([[1.0, -2.0]], 0.25, (4000,), seed=3))
        se = 0.5 / np.sqrt(4000)
        assert np.all(np.abs(ds.points.mean(0) - [1.0, -2.0]) < 4 * se)
        assert np.allclose(ds.points.var(0), 0.25, rtol=0.1)

    def test_determinism(self):
        a, b = three_gaussians(7), three_gaussians(7)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, three_gaussians(8).points)

    def test_hdp_benchmark(self):
        datasets, labels = gen_hdp_benchmark(0)
        assert len(datasets) == 50
        assert all(x.shape == (25, 2) for x in datasets)
        assert all(len(np.unique(lab)) == 5 for lab in labels)
        assert len(np.unique(np.concatenate(labels))) <= 15
        again, _ = gen_hdp_benchmark(0)
        assert all(np.array_equal(x, y) for x, y in zip(datasets, again))


class TestPointFiles:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        X = rng.normal(size=(20, 3)) * 10.0 ** rng.integers(-8, 8, size=(20, 3))
        z = rng.integers(0, 4, 20)
        path = tmp_path / "pts.csv"
        write_points(path, X, z)
        ds = read_points(path, labels=True)
        assert np.array_equal(ds.points, X) and np.array_equal(ds.labels, z)
        write_points(path, X)
        assert np.array_equal(read_points(path).points, X)

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("# header\n1,2\n\n3, 4  # trailing\n")
        assert read_points(path).points.tolist() == [[1, 2], [3, 4]]

    @pytest.mark.parametrize(
        "text, message",
        [
            ("", "no data rows"),
            ("# nothing\n", "no data rows"),
            ("1,2\n3\n", ":2:"),
            ("1,2\n3,x\n", ":2:"),
            ("1,nan\n", "non-finite"),
        ],
    )
    def test_errors(self, tmp_path, text, message):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(ValueError, match=message):
            read_points(path)

    def test_fractional_label(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("1,2,0.5\n")
        with pytest.raises(ValueError, match="integers"):
            read_points(path, labels=True)

    def test_datasets_round_trip(self, tmp_path):
        datasets, labels = gen_hdp_benchmark(1, n_datasets=4)
        path = tmp_path / "multi.csv"
        write_datasets(path, datasets, labels)
        got, got_labels = read_datasets(path, labels=True)
        assert all(np.array_equal(a, b) for a, b in zip(got, datasets))
        assert all(np.array_equal(a, b) for a, b in zip(got_labels, labels))

    def test_dataset_order_is_first_appearance(self, tmp_path):
        path = tmp_path / "multi.csv"
        path.write_text("5,1.0\n2,2.0\n5,3.0\n")
        got, _ = read_datasets(path)
        assert [x.ravel().tolist() for x in got] == [[1.0, 3.0], [2.0]]


class TestLabels:
    def test_formats(self, tmp_path):
        (tmp_path / "a.txt").write_text("0\n1\n1\n")
        (tmp_path / "b.json").write_text(json.dumps({"assignments": [[0, 1], [2]]}))
        (tmp_path / "c.json").write_text("[3, 3, 4]")
        (tmp_path / "d.csv").write_text("0.5,1.0,2\n0.1,0.2,0\n")
        assert read_labels(tmp_path / "a.txt").tolist() == [0, 1, 1]
        assert read_labels(tmp_path / "b.json").tolist() == [0, 1, 2]
        assert read_labels(tmp_path / "c.json").tolist() == [3, 3, 4]
        assert read_labels(tmp_path / "d.csv").tolist() == [2, 0]

    def test_write_read(self, tmp_path):
        write_labels(tmp_path / "z.txt", [4, 0, 2])
        assert read_labels(tmp_path / "z.txt").tolist() == [4, 0, 2]

    def test_json_without_assignments(self, tmp_path):
        (tmp_path / "x.json").write_text("{}")
        with pytest.raises(ValueError, match="assignments"):
            read_labels(tmp_path / "x.json")


def test_iris():
    data = iris()
    assert data.points.shape == (150, 4)
    assert np.bincount(data.labels).tolist() == [50, 50, 50]


def test_result_objective_reevaluates(tmp_path):
    ds = three_gaussians(2)
    res = run_dpmeans(ds.points, 20.0)
    path = tmp_path / "out.json"
    write_result(path, {"assignments": res.assignments, "centroids": res.centroids, "objective": res.objective})
    doc = read_result(path)
    again = dpmeans_objective(ds.points, np.array(doc["assignments"]), 20.0)
    assert again == pytest.approx(doc["objective"], abs=1e-9)
    assert doc["objective"] == res.objective

import json

import numpy as np
import pytest

import msbin


def small(seed, size=48):
    return {"seed": seed, "width": size, "height": size}


def test_generate_is_seeded():
    a, gt_a = msbin.generate(small(3))
    b, gt_b = msbin.generate(small(3))
    assert a.band_count == 8 and a.width == 48 and a.height == 48
    assert gt_a.dtype == bool and gt_a.shape == (48, 48)
    assert np.array_equal(gt_a, gt_b)
    for k in range(1, 9):
        assert np.array_equal(a.band(k), b.band(k))


def test_image_from_arrays():
    bands = [np.full((5, 7), 0.5, dtype=np.float32) for _ in range(3)]
    im = msbin.MsImage("arr", bands)
    assert (im.width, im.height, im.band_count) == (7, 5, 3)
    assert np.allclose(im.band(2), 0.5)
    with pytest.raises(ValueError):
        msbin.MsImage("bad", [np.zeros(4, dtype=np.float32)])


def test_metrics_worked_example():
    s = msbin.evaluate(np.array([[1, 0], [0, 0]]), np.array([[1, 1], [0, 0]]))
    assert s["fm"] == pytest.approx(200 / 3)
    assert s["nrm"] == pytest.approx(25)
    assert s["kappa"] == pytest.approx(50)
    blank = msbin.evaluate(np.zeros((8, 8)), np.zeros((8, 8)))
    assert blank["fm"] is None and blank["notes"]


def test_cvs_holdout_and_ranking():
    assert msbin.cvs_measure(62.38, 78.44, 72.23) == pytest.approx(3.64, abs=0.02)
    assert [msbin.holdout_sizes(21, p)[0] for p in (0.1, 0.2, 0.5, 0.9, 0.97)] == [19, 17, 11, 3, 1]
    assert msbin.ranking_scores([[[70, 1, 2, 60], [80, 2, 1, 75]]]) == [pytest.approx(8.0)]


def test_rank_select_and_combine():
    im, gt = msbin.generate(small(5))
    ranked = msbin.rank_bands(im, gt)
    assert len(ranked) == 4
    fms = [fm for _, fm in ranked]
    assert fms == sorted(fms, reverse=True)
    best, fm = ranked[0]
    mask = msbin.binarize(im, best)
    assert msbin.evaluate(mask, gt)["fm"] == pytest.approx(fm)

    experts = msbin.select_experts([[t for t, _ in ranked]])
    assert len(experts) % 2 == 1
    model = {"experts": [list(t) for t in experts]}
    voted = msbin.combine(im, model)
    assert voted.shape == gt.shape


def test_strict_config():
    with pytest.raises(ValueError):
        msbin.generate({"seed": 1, "colour": 3})
    with pytest.raises(ValueError):
        msbin.binarize(msbin.generate(small(1))[0], (1, 2, 3), {"kernel": {"kind": "gauss"}})


def test_cli_round_trip(tmp_path):
    data = tmp_path / "data"
    code, out, err = msbin.run_cli("--seed", 2, "synth", "-n", 3, "-o", data, "--width", 40, "--height", 40)
    assert code == 0, err
    code, _, err = msbin.run_cli("optimize", "-d", data, "-o", tmp_path / "rank.json")
    assert code == 0, err
    code, _, err = msbin.run_cli("train", "-r", tmp_path / "rank.json", "-s", "all3bs", "-o", tmp_path / "m.json")
    assert code == 0, err
    model = json.loads((tmp_path / "m.json").read_text())
    im = msbin.load_ms(data / "img_000")
    gt = msbin.load_binary(data / "img_000" / "gt.png")
    assert msbin.combine(im, model).shape == gt.shape
    code, _, err = msbin.run_cli("run", "-m", tmp_path / "missing.json", "-i", data, "-o", tmp_path / "p")
    assert code == 1 and "missing.json" in err

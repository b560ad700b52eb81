import json
import subprocess
import sys

import numpy as np
import pytest

from vpp import imgio
from vpp.cli import build_parser, main, projector_from_args
from vpp.synthetic import textureless_two_plane


@pytest.fixture
def scene_files(tmp_path):
    scene = textureless_two_plane(120, 80, bg_disparity=4, fg_disparity=16)
    paths = {
        "left": tmp_path / "left.png",
        "right": tmp_path / "right.png",
        "gt": tmp_path / "gt.pfm",
    }
    imgio.write_image(paths["left"], scene.left)
    imgio.write_image(paths["right"], scene.right)
    imgio.write_pfm(paths["gt"], scene.gt)
    return paths


def test_sample_deterministic(scene_files, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sample", "--gt", str(scene_files["gt"]), "--density", "0.05", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert capsys.readouterr().out.split()[0] == str(round(0.05 * 120 * 80))


def test_sample_zero_density_writes_header_only(scene_files, tmp_path):
    out = tmp_path / "h.csv"
    assert main(["sample", "--gt", str(scene_files["gt"]), "--density", "0", "--out", str(out)]) == 0
    assert out.read_text() == "x,y,d\n"


def test_missing_input_exit_code(tmp_path):
    assert main(["sample", "--gt", str(tmp_path / "nope.pfm")]) == 2
    assert main(["match", "--left", str(tmp_path / "l.png"), "--right", str(tmp_path / "r.png")]) == 2


def test_usage_error_exit_code():
    assert main(["frobnicate"]) == 2
    assert main(["augment", "--alpha"]) == 2


def test_contract_error_exit_code(scene_files, tmp_path):
    assert main(["sample", "--gt", str(scene_files["gt"]), "--density", "2"]) == 1


def test_augment_defaults_are_highlighted_row():
    args = build_parser().parse_args(["augment"])
    cfg = projector_from_args(args).config()
    assert (cfg.variant, cfg.patch, cfg.alpha, cfg.occlusion_strategy) == (
        "vi-random-perpixel-patch", 3, 0.4, "fgd")


def test_augment_writes_pair_and_debug(scene_files, tmp_path):
    hints = tmp_path / "h.csv"
    main(["sample", "--gt", str(scene_files["gt"]), "--out", str(hints)])
    out = tmp_path / "aug"
    code = main(["augment", "--left", str(scene_files["left"]), "--right", str(scene_files["right"]),
                 "--hints", str(hints), "--out", str(out), "--debug-dir", str(tmp_path / "dbg")])
    assert code == 0
    left = imgio.read_image(out / "left.png")
    assert left.shape == (80, 120)
    assert not np.array_equal(left, imgio.read_image(scene_files["left"]))
    assert (tmp_path / "dbg" / "hints_overlay.png").exists()
    assert (tmp_path / "dbg" / "occlusion_mask.png").exists()


def test_augment_alpha_zero_changes_only_fgd(scene_files, tmp_path):
    hints = tmp_path / "h.csv"
    main(["sample", "--gt", str(scene_files["gt"]), "--out", str(hints)])
    base = ["augment", "--left", str(scene_files["left"]), "--right", str(scene_files["right"]),
            "--hints", str(hints), "--alpha", "0"]
    main(base + ["--out", str(tmp_path / "fgd")])
    main(base + ["--out", str(tmp_path / "no"), "--occlusion", "no"])
    orig_l = imgio.read_image(scene_files["left"])
    np.testing.assert_array_equal(imgio.read_image(tmp_path / "no" / "left.png"), orig_l)
    np.testing.assert_array_equal(imgio.read_image(tmp_path / "fgd" / "right.png"),
                                  imgio.read_image(scene_files["right"]))


def test_augment_pointwise_random_routing(scene_files, tmp_path):
    hints = tmp_path / "h.csv"
    imgio.write_hints(imgio.HintSet([60], [40], [4.0]), hints)
    out = tmp_path / "pt"
    main(["augment", "--left", str(scene_files["left"]), "--right", str(scene_files["right"]),
          "--hints", str(hints), "--occlusion", "no", "--patch", "1", "--pattern", "random",
          "--alpha", "1", "--out", str(out)])
    left = imgio.read_image(out / "left.png")
    right = imgio.read_image(out / "right.png")
    orig = imgio.read_image(scene_files["left"])
    assert np.count_nonzero(left != orig) <= 1
    assert left[40, 60] == right[40, 56]


def test_match_and_eval(scene_files, tmp_path):
    disp = tmp_path / "d.pfm"
    base = ["match", "--left", str(scene_files["left"]), "--right", str(scene_files["right"]),
            "--max-disp", "32"]
    assert main(base + ["--out", str(disp)]) == 0
    assert imgio.read_pfm(disp).shape == (80, 120)
    disp4 = tmp_path / "d4.pfm"
    hints = tmp_path / "h.csv"
    main(["sample", "--gt", str(scene_files["gt"]), "--out", str(hints)])
    assert main(base + ["--paths", "4", "--guide", str(hints), "--out", str(disp4)]) == 0
    metrics = tmp_path / "m.json"
    assert main(["eval", "--disp", str(disp), "--gt", str(scene_files["gt"]), "--out", str(metrics)]) == 0
    doc = json.loads(metrics.read_text())
    assert list(doc) == ["bad1", "bad2", "bad3", "bad4", "avg_px", "evaluated_count", "coverage"]


def test_paths_flag_changes_result(tmp_path):
    rng = np.random.default_rng(0)
    tex = rng.integers(0, 256, (60, 110), dtype=np.uint8)
    tex[20:40, 30:70] = 128
    imgio.write_image(tmp_path / "l.png", np.ascontiguousarray(tex[:, :100]))
    imgio.write_image(tmp_path / "r.png", np.ascontiguousarray(tex[:, 6:106]))
    outs = []
    for paths in ("4", "8"):
        out = tmp_path / f"d{paths}.pfm"
        main(["match", "--left", str(tmp_path / "l.png"), "--right", str(tmp_path / "r.png"),
              "--max-disp", "16", "--paths", paths, "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] != outs[1]


def test_pipeline_density_sweep(scene_files, tmp_path):
    out = tmp_path / "run"
    code = main(["pipeline", "--left", str(scene_files["left"]), "--right", str(scene_files["right"]),
                 "--gt", str(scene_files["gt"]), "--densities", "0,0.01,0.05", "--max-disp", "32",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "metrics.json").read_text())
    assert [r["density"] for r in doc["results"]] == [0.0, 0.01, 0.05]
    assert set(doc["results"][0]["modes"]) == {"baseline", "vpp", "guided", "vpp+guided"}
    assert doc["config"]["SemiGlobalMatcher"]["max_disparity"] == 32
    assert (out / "density_0.05" / "vpp" / "left.png").exists()
    assert (out / "density_0.05" / "vpp_guided" / "disparity.pfm").exists()


def test_config_file_with_override(scene_files, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"gt={scene_files['gt']}\ndensity=0.5\nseed=3\n")
    out = tmp_path / "h.csv"
    assert main(["sample", "--config", str(cfg), "--density", "0.01", "--out", str(out)]) == 0
    assert len(imgio.read_hints(out)) == round(0.01 * 120 * 80)


def test_module_entry_point(scene_files, tmp_path):
    res = subprocess.run([sys.executable, "-m", "vpp", "sample", "--gt", str(scene_files["gt"]),
                          "--out", str(tmp_path / "h.csv")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr

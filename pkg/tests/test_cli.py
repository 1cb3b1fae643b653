import hashlib
import json

import numpy as np
import pytest
from oracles import blurred_disc
from PIL import Image

from nucleoforge import io
from nucleoforge.cli import main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_cfg(path, **synth):
    base = {"width": 64, "height": 64, "nuclei_count": [2, 4]}
    base.update(synth)
    path.write_text(json.dumps({"synth": base, "seed": 9}))
    return str(path)


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_gen_masks_and_rerun_identical(workdir, capsys):
    cfg = write_cfg(workdir / "cfg.json")
    assert main(["gen-masks", cfg, "--count", "1", "--out", "a"]) == 0
    assert capsys.readouterr().out.strip().endswith("manifest.json")
    assert sorted(p.name for p in (workdir / "a").iterdir()) == ["manifest.json", "mask_00000.png"]
    assert main(["gen-masks", cfg, "--count", "3", "--out", "b", "--skeleton-maps"]) == 0
    assert main(["gen-masks", cfg, "--count", "3", "--out", "c", "--skeleton-maps"]) == 0
    assert digest(workdir / "b") == digest(workdir / "c")
    assert main(["gen-masks", cfg, "--count", "1", "--out", "d", "--seed", "10"]) == 0
    assert digest(workdir / "d")["mask_00000.png"] == digest(workdir / "b")["mask_00001.png"]


def test_gen_masks_exit_codes(workdir, capsys):
    bad = workdir / "bad.json"
    bad.write_text('{"synth": {\n  "width": 64,,\n}}')
    assert main(["gen-masks", str(bad), "--count", "1"]) == 2
    assert "line 2 column" in capsys.readouterr().err
    unknown = workdir / "unknown.json"
    unknown.write_text('{"synth": {"widht": 3}}')
    assert main(["gen-masks", str(unknown), "--count", "1"]) == 2
    assert main(["gen-masks", str(workdir / "missing.json"), "--count", "1"]) == 3
    dense = write_cfg(workdir / "dense.json", width=24, height=24, nuclei_count=[30, 30], max_attempts=3)
    assert main(["gen-masks", dense, "--count", "1", "--out", "x"]) == 4
    cfg = write_cfg(workdir / "cfg.json")
    (workdir / "blocker").write_text("")
    assert main(["gen-masks", cfg, "--count", "1", "--out", "blocker/sub"]) == 3


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["loss", "a.png", "b.png", "--beta", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "a.png", "b.png", "--lambda", "0.1", "--out-dir", "o"])
    assert exc.value.code == 2


def test_topo_map_fixture(workdir):
    lab = np.zeros((3, 3), int) + 1
    io.write_label_png(workdir / "sq.png", lab)
    assert main(["topo-map", "sq.png", "--out", "t"]) == 0
    smap = np.array(Image.open(workdir / "t_skeleton_map.png"))
    assert smap[1, 1] == 255 and (smap[[0, 0, 0, 1, 1, 2, 2, 2], [0, 1, 2, 0, 2, 0, 1, 2]] == 64).all()
    assert io.read_pfm(workdir / "t_skeleton_map.pfm")[1, 1] == 2.0
    assert io.read_pfm(workdir / "t_distance.pfm")[0, 0] == 0.5
    skel = np.array(Image.open(workdir / "t_skeleton.png"))
    assert skel[1, 1] == 255 and skel.sum() == 255


def test_topo_map_empty_and_bad_input(workdir):
    io.write_label_png(workdir / "z.png", np.zeros((4, 4), int))
    assert main(["topo-map", "z.png", "--out", "z"]) == 0
    assert not np.array(Image.open(workdir / "z_skeleton_map.png")).any()
    (workdir / "x.png").write_text("{}")
    assert main(["topo-map", "x.png", "--out", "x"]) == 2
    assert main(["topo-map", "nope.png", "--out", "x"]) == 3


def test_loss_command(workdir, capsys):
    labels, _ = blurred_disc(16, 5.0)
    io.write_label_png(workdir / "l.png", labels)
    io.write_u8_png(workdir / "u.png", np.full((16, 16), 100, np.uint8))
    assert main(["loss", "u.png", "l.png", "--lambda", "0.1", "--beta", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"l1", "l2", "ls1", "ls2", "beta", "lambda", "total"}
    assert report["ls1"] == 0.0 and report["l1"] == 0.0
    assert main(["loss", "u.png", "l.png", "--lambda", "0.1", "--beta", "2",
                 "--d-real", "0.5", "--d-fake", "0.5", "--out", "r.json"]) == 0
    r = json.loads((workdir / "r.json").read_text())
    assert r["l1"] == pytest.approx(np.log(2)) and r["total"] == pytest.approx(2 * np.log(2) + 2 * r["ls2"])
    io.write_label_png(workdir / "empty.png", np.zeros((16, 16), int))
    assert main(["loss", "u.png", "empty.png", "--lambda", "0.1", "--beta", "1"]) == 5
    io.write_label_png(workdir / "small.png", np.ones((8, 8), int))
    assert main(["loss", "u.png", "small.png", "--lambda", "0.1", "--beta", "1"]) == 2
    assert main(["loss", "u.png", "l.png", "--lambda", "-1", "--beta", "1"]) == 2
    assert main(["loss", "u.png", "l.png", "--lambda", "0.1", "--beta", "1", "--d-real", "2"]) == 2


def test_optimize_command(workdir, capsys):
    labels, image = blurred_disc()
    io.write_label_png(workdir / "l.png", labels)
    io.write_pfm(workdir / "g.pfm", image)
    assert main(["optimize", "g.pfm", "l.png", "--lambda", "0.1", "--beta", "1",
                 "--iters", "100", "--out-dir", "o"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["contrast_after"]["cross"] > report["contrast_before"]["cross"]
    assert report["contrast_after"]["along"] < report["contrast_before"]["along"]
    assert report["final"]["total"] <= report["initial"]["total"]
    for name in ("before.png", "after.png", "after.pfm", "report.json"):
        assert (workdir / "o" / name).exists()


def test_quality_command(workdir, capsys):
    rng = np.random.default_rng(0)
    a = (rng.random((40, 40)) * 255).astype(np.uint8)
    io.write_u8_png(workdir / "a.png", a)
    io.write_u8_png(workdir / "b.png", 255 - a)
    (workdir / "pairs.json").write_text(json.dumps([["a.png", "a.png"], {"reference": "a.png", "candidate": "b.png"}]))
    assert main(["quality", "pairs.json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pairs"][0]["ssim"] == 1.0 and out["pairs"][0]["gmsd"] == 0.0
    assert set(out["mean"]) == {"SSIM", "FSIM", "GMSD"}
    (workdir / "bad.json").write_text('[["a.png"]]')
    assert main(["quality", "bad.json"]) == 2
    (workdir / "missing.json").write_text('[["a.png", "zzz.png"]]')
    assert main(["quality", "missing.json"]) == 3


def test_seg_eval_and_watershed(workdir, capsys):
    gt = workdir / "gt"
    gt.mkdir()
    for i in range(2):
        lab = np.zeros((12, 12), int)
        lab[1:5, 1:5] = 1
        lab[6:11, 3 + i : 9] = 2
        io.write_label_png(gt / f"im{i}.png", lab)
    assert main(["seg-eval", str(gt), str(gt)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mean"] == {"DQ": 1.0, "SQ": 1.0, "PQ": 1.0, "AJI": 1.0}
    empty = workdir / "pred"
    empty.mkdir()
    assert main(["seg-eval", str(empty), str(gt)]) == 3

    yy, xx = np.mgrid[:40, :50]
    m = ((yy - 20) ** 2 + (xx - 19) ** 2 <= 64) | ((yy - 20) ** 2 + (xx - 31) ** 2 <= 64)
    io.write_u8_png(workdir / "m.png", m.astype(np.uint8) * 255)
    assert main(["watershed", "m.png", "--out", "w.png"]) == 0
    assert json.loads(capsys.readouterr().out)["labels"] == 2
    assert np.array_equal(io.read_label_png(workdir / "w.png") > 0, m)
    assert main(["watershed", "m.png", "--out", "w.png", "--h", "-1"]) == 2

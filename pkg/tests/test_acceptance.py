"""The nine acceptance criteria, each at its stated tolerance.

Every test records a one-line verdict that ``conftest.py`` prints in the
terminal summary, then asserts it.
"""

import hashlib
import json
import os
import time

import numpy as np
from oracles import blurred_disc, brute_aji, brute_pq, central_difference, random_label_map, s1_summand, s2_summand
from scipy import ndimage

from nucleoforge import io
from nucleoforge.cli import main
from nucleoforge.loss import (
    LossParams,
    contrast_report,
    loss_gradient,
    optimize_patch,
    regularizer_breakdown,
    s1_term,
    s2_term,
)
from nucleoforge.quality import fsim, gmsd, ssim
from nucleoforge.raster import ContourSet, extract_contours
from nucleoforge.segmentation import aji, dq_sq_pq, iou_matching, watershed_split
from nucleoforge.synth import SynthConfig, batch_gen, gen_nuclei_masks
from nucleoforge.topo import distance_map, skeleton_map, topo_skeleton


def test_criterion_1_gradient_matches_finite_differences(acceptance):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        g = 0.05 + 0.9 * rng.random((16, 16))
        c = ContourSet.from_mask(rng.random((16, 16)) < 0.3)
        params = LossParams(lam=0.05 + 0.25 * rng.random(), beta=2.0 * rng.random())

        def objective(x):
            b = regularizer_breakdown(x, c, params)
            return b.ls1 + params.beta * b.ls2

        fd = central_difference(objective, g, h=1e-4)
        an = loss_gradient(g, c, params)
        worst = max(worst, np.abs(an - fd).max() / np.abs(fd).max())
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 10.0
    acceptance(1, ok, f"max relative error {worst:.2e} < 1e-4, {elapsed:.1f} s < 10 s")
    assert ok


def test_criterion_2_loss_term_fixtures(acceptance):
    p = LossParams(lam=0.1)
    g = np.full((3, 3), 0.5)
    g[1, 2] = 0.6
    pair = ContourSet.from_coords([(1, 1), (1, 2)], g.shape)
    all_but_right = ContourSet.from_coords(
        [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)], g.shape
    )
    all_but_corner = ContourSet.from_coords(
        [(0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)], g.shape
    )
    flat = np.full((3, 3), 0.5)
    steep = flat.copy()
    steep[1, 2] = 0.5 + 0.1 * np.sqrt(2)
    got = {
        "s1 |dg|=lam": (s1_term(g, pair, (1, 1), p), 0.462117, s1_summand(0.1, 0.1)),
        "s2 axis": (s2_term(flat, all_but_right, (1, 1), p), 1.0, s2_summand(0, 1, 1)),
        "s2 diagonal": (s2_term(flat, all_but_corner, (1, 1), p), 0.707107, s2_summand(0, 1, np.sqrt(2))),
        "s2 |dg|=lam*sqrt2": (s2_term(steep, all_but_right, (1, 1), p), 0.367879,
                              s2_summand(0.1 * np.sqrt(2), 0.1, 1)),
    }
    errors = {k: max(abs(v - ref), abs(v - oracle)) for k, (v, ref, oracle) in got.items()}
    ok = all(e < 1e-6 for e in errors.values())
    acceptance(2, ok, ", ".join(f"{k} err {e:.1e}" for k, e in errors.items()))
    assert ok


def test_criterion_3_mechanism_demonstration(acceptance):
    labels, g0 = blurred_disc(32, 10.0, 1.5)
    c = extract_contours(labels)
    start = time.perf_counter()
    g, trace = optimize_patch(g0, c, LossParams(lam=0.1, beta=1.0), step=1.0, iters=500)
    elapsed = time.perf_counter() - start
    totals = [t.total for t in trace]
    monotone = all(a >= b for a, b in zip(totals, totals[1:]))
    before, after = contrast_report(g0, c), contrast_report(g, c)
    ratio = after["cross"] / before["cross"]
    ok = monotone and ratio >= 1.5 and after["along"] <= before["along"] and elapsed < 5.0
    acceptance(
        3, ok,
        f"monotone={monotone}, cross x{ratio:.2f} >= 1.5, along {before['along']:.4f} -> "
        f"{after['along']:.4f}, {elapsed:.1f} s < 5 s",
    )
    assert ok


def test_criterion_4_skeleton_map_fixtures(acceptance):
    lab = np.zeros((5, 5), int)
    lab[1:4, 1:4] = 1
    d = distance_map(lab)
    ring = [(r, c) for r in range(1, 4) for c in range(1, 4) if (r, c) != (2, 2)]
    fixture = (
        d[2, 2] == 1.0
        and all(d[rc] == 0.5 for rc in ring)
        and topo_skeleton(lab).sum() == 1
        and topo_skeleton(lab)[2, 2]
        and skeleton_map(lab)[2, 2] == 2.0
    )
    empty = 0
    for seed in range(100):
        m = gen_nuclei_masks(SynthConfig(seed=seed))
        skel = topo_skeleton(m)
        counts = np.bincount(m[skel], minlength=m.max() + 1)[1:]
        empty += int((counts == 0).sum())
    ok = fixture and empty == 0
    acceptance(4, ok, f"3x3 fixture exact={fixture}, nuclei without skeleton in 100 masks: {empty}")
    assert ok


def test_criterion_5_metric_identities(acceptance):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        shape = tuple(rng.integers(32, 80, 2))
        x = ndimage.gaussian_filter(rng.random(shape), rng.uniform(0.5, 3))
        x = (x - x.min()) / (x.max() - x.min())
        worst = max(worst, abs(ssim(x, x) - 1), abs(fsim(x, x) - 1), abs(gmsd(x, x)))
    closed = (2 * 0.25 * 0.75 + 1e-4) / (0.25**2 + 0.75**2 + 1e-4)
    const_err = abs(ssim(np.full((16, 16), 0.25), np.full((16, 16), 0.75)) - closed)
    ok = worst < 1e-9 and const_err < 1e-6
    acceptance(5, ok, f"identity deviation {worst:.1e} < 1e-9, constant SSIM err {const_err:.1e} < 1e-6")
    assert ok


def test_criterion_6_segmentation_oracle(acceptance):
    rng = np.random.default_rng(6)
    mismatches = identity_failures = 0
    for _ in range(200):
        shape = tuple(rng.integers(1, 13, 2))
        pred, gt = random_label_map(rng, shape), random_label_map(rng, shape)
        dq, sq, pq = dq_sq_pq(iou_matching(pred, gt))
        mismatches += (dq, sq, pq) != brute_pq(pred, gt) or aji(pred, gt) != brute_aji(pred, gt)
        identity_failures += pq != dq * sq
    ok = mismatches == 0 and identity_failures == 0
    acceptance(6, ok, f"200 pairs: {mismatches} oracle mismatches, {identity_failures} pq != dq*sq")
    assert ok


def test_criterion_7_watershed_two_discs(acceptance):
    yy, xx = np.mgrid[:40, :50]
    m = ((yy - 20) ** 2 + (xx - 19) ** 2 <= 64) | ((yy - 20) ** 2 + (xx - 31) ** 2 <= 64)
    lab = watershed_split(m)
    n = len(np.unique(lab[lab > 0]))
    ok = n == 2 and np.array_equal(lab > 0, m)
    acceptance(7, ok, f"{n} labels, union equals mask: {np.array_equal(lab > 0, m)}")
    assert ok


def _tree_digest(directory):
    h = hashlib.sha256()
    for name in sorted(os.listdir(directory)):
        h.update(name.encode())
        with open(os.path.join(directory, name), "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def test_criterion_8_scale_check(acceptance, tmp_path):
    cfg = SynthConfig(width=256, height=256, seed=0)
    start = time.perf_counter()
    manifest = batch_gen(cfg, 6000, tmp_path / "run1", skeleton_maps=True)
    elapsed = time.perf_counter() - start
    batch_gen(cfg, 6000, tmp_path / "run2", skeleton_maps=True)
    same = _tree_digest(tmp_path / "run1") == _tree_digest(tmp_path / "run2")
    files = len(os.listdir(tmp_path / "run1"))
    ok = elapsed < 300.0 and same and len(manifest["images"]) == 6000 and files == 12001
    cores = os.cpu_count()
    acceptance(8, ok, f"6000 masks + skeleton maps in {elapsed:.0f} s < 300 s on {cores} core(s), "
                      f"re-run hash-identical: {same}")
    assert ok


def test_criterion_9_round_trips_and_exit_codes(acceptance, tmp_path, monkeypatch):
    rng = np.random.default_rng(9)
    checks = {}
    f = (rng.standard_normal((13, 7)) * 1e3).astype(np.float32)
    io.write_pfm(tmp_path / "f.pfm", f)
    checks["pfm"] = io.read_pfm(tmp_path / "f.pfm").tobytes() == f.tobytes()
    lab = rng.integers(0, 65536, (9, 11))
    io.write_label_png(tmp_path / "l.png", lab)
    checks["png16"] = np.array_equal(io.read_label_png(tmp_path / "l.png"), lab)

    monkeypatch.chdir(tmp_path)
    (tmp_path / "ok.json").write_text(json.dumps({"synth": {"width": 48, "height": 48, "nuclei_count": [1, 3]}}))
    (tmp_path / "bad.json").write_text("{\n  \"synth\": [\n")
    (tmp_path / "dense.json").write_text(
        json.dumps({"synth": {"width": 20, "height": 20, "nuclei_count": [40, 40], "max_attempts": 2}})
    )
    io.write_label_png(tmp_path / "empty.png", np.zeros((8, 8), int))
    io.write_u8_png(tmp_path / "img.png", np.full((8, 8), 9, np.uint8))
    codes = {
        0: main(["gen-masks", "ok.json", "--count", "1", "--out", "o"]),
        2: main(["gen-masks", "bad.json", "--count", "1"]),
        3: main(["gen-masks", "absent.json", "--count", "1"]),
        4: main(["gen-masks", "dense.json", "--count", "1", "--out", "d"]),
        5: main(["loss", "img.png", "empty.png", "--lambda", "0.1", "--beta", "1"]),
    }
    try:
        main(["loss", "img.png", "empty.png", "--beta", "1"])
        codes["2 (missing --lambda)"] = 0
    except SystemExit as exc:
        codes["2 (missing --lambda)"] = exc.code
    exit_ok = all(int(str(k).split()[0]) == v for k, v in codes.items())
    ok = all(checks.values()) and exit_ok
    acceptance(9, ok, f"pfm bit-exact={checks['pfm']}, png16 lossless={checks['png16']}, "
                      f"exit codes {sorted(set(codes.values()))} as documented={exit_ok}")
    assert ok

"""End-to-end acceptance checks, one test per shipping criterion.

Each test prints the measured numbers so a -v run reads as a checklist.
These are deliberately heavier than the unit tests; the whole module runs
in a few minutes on a desktop CPU.
"""

import math
import struct
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import cfg_with
from oracles import (crossing_number_map, eer_sweep, otsu_exhaustive_fast,
                     entropy_bits, random_strokes, rotate_template_points,
                     translate_template_points)
from touchprint.capture import (Feedback, SessionStatus, finalize_session,
                                process_frame as capture_frame,
                                start_session)
from touchprint.config import DEFAULT_CONFIG
from touchprint.enhancement import apply_clahe, tile_lut
from touchprint.errors import (DiscardFrame, ParseError, SeparationFailed)
from touchprint.evaluation import (equal_error_rate, fta_rate, fuse_rows,
                                   scores_to_set, ScoreRow)
from touchprint.geometry import HandSide
from touchprint.matcher import compare_templates
from touchprint.minutiae import (Minutia, MinutiaTemplate, OrientationField,
                                 build_template, decode_template,
                                 encode_template, extract_minutiae,
                                 quantize_angle, thin_skeleton)
from touchprint.pipeline import process_frame
from touchprint.segmentation import otsu_threshold
from touchprint.synth import (BG_BASE, background_frame, blur_frame,
                              fingerprint_patch, make_capture_frame,
                              make_hand_frame, ridge_texture, rng_for)

TWO_PI = 2.0 * math.pi


def random_histograms(rng, count):
    hists = []
    for _ in range(count):
        kind = rng.integers(0, 5)
        h = np.zeros(256, dtype=np.int64)
        if kind == 0:
            h[:] = rng.integers(0, 1000, 256)
        elif kind == 1:  # sparse
            idx = rng.choice(256, size=rng.integers(1, 12), replace=False)
            h[idx] = rng.integers(1, 5000, len(idx))
        elif kind == 2:  # two humps
            for center, spread in ((rng.integers(20, 100), 12),
                                   (rng.integers(150, 240), 18)):
                v = rng.normal(center, spread, 4000).astype(int)
                np.add.at(h, np.clip(v, 0, 255), 1)
        elif kind == 3:  # single spike
            h[rng.integers(0, 256)] = rng.integers(1, 100)
        else:  # plateau
            h[:] = rng.integers(0, 3)
            h[rng.integers(0, 200):] += rng.integers(0, 4)
        if h.sum() == 0:
            h[7] = 1
        hists.append(h)
    return hists


def test_criterion_01_otsu_matches_exhaustive_oracle():
    rng = np.random.default_rng(101)
    hists = random_histograms(rng, 1000)
    t0 = time.perf_counter()
    got = [otsu_threshold(h) for h in hists]
    elapsed = time.perf_counter() - t0
    expected = [otsu_exhaustive_fast(h) for h in hists]
    mismatches = sum(1 for g, e in zip(got, expected) if g != e)
    print(f"\n[criterion 1] otsu oracle: {mismatches} mismatches / 1000, "
          f"impl {elapsed * 1000:.0f} ms")
    assert mismatches == 0
    assert elapsed < 1.0


def random_score_sets(rng, count):
    sets = []
    for _ in range(count):
        ng = int(rng.integers(2, 501))
        ni = int(rng.integers(2, 501))
        kind = rng.integers(0, 4)
        if kind == 0:
            gen = rng.uniform(0, 1, ng)
            imp = rng.uniform(0, 1, ni)
        elif kind == 1:  # partially separated
            gen = rng.normal(0.65, 0.12, ng)
            imp = rng.normal(0.35, 0.12, ni)
        elif kind == 2:  # heavy ties on a coarse grid
            gen = np.round(rng.uniform(0, 1, ng), 2)
            imp = np.round(rng.uniform(0, 1, ni), 2)
        else:  # ties across the two sides
            pool = rng.uniform(0, 1, 10)
            gen = rng.choice(pool, ng)
            imp = rng.choice(pool, ni)
        sets.append((np.clip(gen, 0, 1), np.clip(imp, 0, 1)))
    return sets


def test_criterion_02_eer_matches_sweep_oracle():
    from touchprint.evaluation import ScoreSet
    rng = np.random.default_rng(102)
    sets = random_score_sets(rng, 1000)
    t0 = time.perf_counter()
    got = [equal_error_rate(ScoreSet(genuine=g, impostor=i)) for g, i in sets]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for (g, i), value in zip(sets, got):
        worst = max(worst, abs(value - eer_sweep(g, i)))
    print(f"\n[criterion 2] eer oracle: max |diff| {worst:.2e}, "
          f"impl {elapsed * 1000:.0f} ms")
    assert worst <= 1e-9
    assert elapsed < 5.0


def test_criterion_03_crossing_number_matches_per_pixel_recount():
    rng = np.random.default_rng(103)
    checked = 0
    for i in range(50):
        skel = thin_skeleton(random_strokes(rng, 64, 64))
        ny = -(-skel.shape[0] // 16)
        nx = -(-skel.shape[1] // 16)
        field = OrientationField(angles=np.full((ny, nx), 0.3),
                                 coherence=np.ones((ny, nx)), block_size=16)
        got = {(m.x, m.y) for m in extract_minutiae(skel, field)}
        ref_cn = crossing_number_map(skel)
        ys, xs = np.nonzero(skel)
        expected = {(int(x), int(y)) for y, x in zip(ys, xs)
                    if ref_cn[y, x] in (1, 3)}
        assert got == expected, f"skeleton {i}: sets differ"
        checked += len(expected)
    print(f"\n[criterion 3] crossing-number sets equal on 50 skeletons "
          f"({checked} minutiae)")


def test_criterion_04_pipeline_geometry_over_random_rotations():
    rng = np.random.default_rng(104)
    ok = 0
    failures = []
    for i in range(200):
        hand = HandSide.RIGHT if i % 2 == 0 else HandSide.LEFT
        angle = float(rng.uniform(0.0, 360.0))
        frame = make_hand_frame(i, index=i, hand=hand, angle_deg=angle,
                                base_width=90)
        want_ids = [2, 3, 4, 5] if hand is HandSide.RIGHT else [10, 9, 8, 7]
        try:
            fingers = process_frame(frame.image, hand, DEFAULT_CONFIG)
        except (DiscardFrame, SeparationFailed) as exc:
            failures.append((i, angle, type(exc).__name__))
            continue
        assert len(fingers) == 4, f"frame {i}: {len(fingers)} prints"
        assert [pf.fingerprint.source_finger_id for pf in fingers] == want_ids
        for pf in fingers:
            g = pf.fingerprint.gray
            assert g.shape[1] == 300, f"frame {i}: width {g.shape[1]}"
            assert g.shape[0] <= 600, f"frame {i}: height {g.shape[0]}"
        ok += 1
    rate = ok / 200.0
    print(f"\n[criterion 4] geometry: {ok}/200 frames ok "
          f"({rate:.1%}), failures {failures}")
    assert rate >= 0.95


def transformed_copy(t, rng):
    angle = float(rng.uniform(-math.pi, math.pi))  # <= 180 degrees
    triples = [(m.x, m.y, m.angle) for m in t.minutiae]
    turned = rotate_template_points(triples, angle, cx=t.width / 2.0,
                                    cy=t.height / 2.0)
    dx = float(rng.uniform(-40, 40))
    dy = float(rng.uniform(-40, 40))
    moved = translate_template_points(turned, dx, dy)
    xs = [p[0] for p in moved]
    ys = [p[1] for p in moved]
    shift_x = -min(xs) + 2.0
    shift_y = -min(ys) + 2.0
    mins = tuple(
        Minutia(x=int(round(x + shift_x)), y=int(round(y + shift_y)),
                angle=quantize_angle(a % TWO_PI))
        for x, y, a in moved)
    width = max(p.x for p in mins) + 3
    height = max(p.y for p in mins) + 3
    return MinutiaTemplate(finger_id=t.finger_id, width=width, height=height,
                           minutiae=mins)


def test_criterion_05_matcher_sanity():
    rng = np.random.default_rng(105)
    cfg = DEFAULT_CONFIG

    templates = [build_template(
        fingerprint_patch(s, subject=s, finger_id=2, session=1), cfg)
        for s in range(8)]
    for t in templates:
        assert compare_templates(t, t, cfg).value == 1.0

    worst_drop = 0.0
    for trial in range(40):
        t = templates[trial % len(templates)]
        moved = transformed_copy(t, rng)
        score = compare_templates(t, moved, cfg).value
        worst_drop = max(worst_drop, 1.0 - score)
    assert worst_drop <= 0.05, f"worst transform drop {worst_drop:.3f}"

    def null_template(k):
        pts = set()
        r = np.random.default_rng(9000 + k)
        while len(pts) < 40:
            pts.add((int(r.integers(0, 300)), int(r.integers(0, 400))))
        mins = tuple(Minutia(x=x, y=y,
                             angle=quantize_angle(float(r.uniform(0, TWO_PI))))
                     for x, y in sorted(pts))
        return MinutiaTemplate(finger_id=1, width=300, height=400,
                               minutiae=mins)

    nulls = sorted(
        compare_templates(null_template(2 * k), null_template(2 * k + 1),
                          cfg).value
        for k in range(100))
    p95 = nulls[94]
    print(f"\n[criterion 5] matcher: worst transform drop {worst_drop:.4f}, "
          f"null 95th pct {p95:.3f} (max {nulls[-1]:.3f})")
    assert p95 <= 0.3


def test_criterion_06_synthetic_corpus_error_rates():
    cfg = DEFAULT_CONFIG
    t0 = time.perf_counter()
    templates = {}
    for subject in range(20):
        for finger_id in (2, 3, 4, 5):
            for session in (1, 2):
                fp = fingerprint_patch(subject, subject=subject,
                                       finger_id=finger_id, session=session)
                templates[(subject, finger_id, session)] = build_template(
                    fp, cfg)

    rows = []
    keys = sorted(templates)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            if a[1] != b[1] or a[2] == b[2]:
                continue
            label = "genuine" if a[0] == b[0] else "impostor"
            value = compare_templates(templates[a], templates[b], cfg).value
            rows.append(ScoreRow(probe_id=f"{a[0]}_{a[2]}",
                                 reference_id=f"{b[0]}_{b[2]}",
                                 finger_id=a[1], label=label, score=value))

    single = equal_error_rate(scores_to_set(rows))
    fused_rows = fuse_rows(rows, rule="mean", fingers=4)
    fused = equal_error_rate(scores_to_set(fused_rows))
    elapsed = time.perf_counter() - t0
    n_gen = sum(1 for r in rows if r.label == "genuine")
    print(f"\n[criterion 6] corpus: single EER {single:.4f} "
          f"({n_gen} genuine / {len(rows) - n_gen} impostor), "
          f"fused EER {fused:.4f}, {elapsed:.0f}s")
    assert single <= 0.05
    assert fused <= single
    assert elapsed < 120.0


def test_criterion_07_capture_sessions_and_fta():
    # part 1: five clean frames complete a session with one sample per finger
    st = start_session(HandSide.RIGHT, DEFAULT_CONFIG)
    for i in range(5):
        frame = make_capture_frame(210, index=210, tilt_deg=2.0 * i - 4.0)
        st, fb = capture_frame(st, frame.image)
    assert st.status is SessionStatus.DONE
    assert fb is Feedback.COMPLETE
    result = finalize_session(st)
    assert len(result.samples) == 4
    assert [t.finger_id for t in result.templates] == [2, 3, 4, 5]

    # part 2: a stream of defocused frames exhausts the default budget
    blurred = blur_frame(
        make_hand_frame(0, 0, HandSide.RIGHT, angle_deg=3.0, base_width=90),
        np.random.default_rng(0), sigma=6.0)
    st = start_session(HandSide.RIGHT, DEFAULT_CONFIG)
    while st.status not in (SessionStatus.DONE, SessionStatus.FAILED):
        st, _ = capture_frame(st, blurred.image)
    assert st.status is SessionStatus.FAILED
    assert st.frames_seen == DEFAULT_CONFIG.capture.max_frames == 300

    # part 3: batch of 50 short sessions, rate equals the manual count
    cfg = cfg_with("quality.min_roi_height=80", "quality.min_roi_area=3000",
                   "quality.grad_min=6.0", "capture.samples_per_finger=1",
                   "capture.max_frames=2")
    failures = 0
    for k in range(50):
        st = start_session(HandSide.RIGHT, cfg)
        doomed = k % 5 == 0
        while st.status not in (SessionStatus.DONE, SessionStatus.FAILED):
            if doomed:
                frame = background_frame(3, k * 10 + st.frames_seen)
            else:
                frame = make_hand_frame(0, k, HandSide.RIGHT,
                                        angle_deg=3.0, base_width=90).image
            st, _ = capture_frame(st, frame)
        if st.status is SessionStatus.FAILED:
            failures += 1
    assert failures == 10  # every fifth session saw only background
    assert fta_rate(50, failures) == failures / 50
    print(f"\n[criterion 7] capture: clean done in 5 frames, "
          f"blurred failed at 300, batch fta {fta_rate(50, failures):.2f}")


def test_criterion_08_template_format_fidelity():
    rng = np.random.default_rng(108)
    for i in range(1000):
        n = int(rng.integers(0, 60))
        w = int(rng.integers(1, 2000))
        h = int(rng.integers(1, 2000))
        mins = tuple(
            Minutia(x=int(rng.integers(0, w)), y=int(rng.integers(0, h)),
                    angle=quantize_angle(float(rng.uniform(0, TWO_PI))))
            for _ in range(n))
        t = MinutiaTemplate(finger_id=int(rng.integers(1, 11)), width=w,
                            height=h, minutiae=mins)
        data = encode_template(t)
        assert len(data) == 12 + 6 * n
        assert decode_template(data) == t
        if i % 5 == 0:
            cut = int(rng.integers(0, len(data)))
            with pytest.raises(ParseError):
                decode_template(data[:cut])
    print("\n[criterion 8] template codec: 1000 round-trips exact, "
          "truncations rejected")


def test_criterion_09_pipeline_latency_at_1080p():
    script = Path(__file__).resolve().parents[1] / "scripts" / "benchmark.py"
    assert script.exists(), "documented measurement script missing"

    def build_frame(seed):
        rng = np.random.default_rng(seed)
        hand = make_capture_frame(seed,
                                  tilt_deg=float(rng.uniform(-12.0, 12.0)))
        img = hand.image
        h, w = img.shape[:2]
        canvas = np.empty((1080, 1920, 3), np.uint8)
        canvas[:] = np.asarray(BG_BASE, np.uint8)
        x0 = (1920 - w) // 2
        canvas[1080 - h:, x0:x0 + w] = img
        return canvas

    frames = [build_frame(i) for i in range(12)]
    process_frame(frames[0], HandSide.RIGHT, DEFAULT_CONFIG)  # warm-up
    times = []
    for img in frames:
        t0 = time.perf_counter()
        fingers = process_frame(img, HandSide.RIGHT, DEFAULT_CONFIG)
        times.append((time.perf_counter() - t0) * 1000.0)
        assert len(fingers) == 4
    times.sort()
    median = times[len(times) // 2]
    print(f"\n[criterion 9] latency: median {median:.0f} ms, "
          f"max {times[-1]:.0f} ms over 12 frames at 1920x1080")
    assert median <= 500.0

    run = subprocess.run([sys.executable, str(script), "--frames", "3"],
                         capture_output=True, text=True)
    assert run.returncode == 0, run.stdout + run.stderr


def test_criterion_10_clahe_invariants():
    rng = np.random.default_rng(110)

    for v in (0, 51, 200, 255):
        img = np.full((96, 96), v, dtype=np.uint8)
        assert np.array_equal(apply_clahe(img, 2.0, 8), img)

    for _ in range(200):
        h = np.zeros(256, dtype=np.int64)
        idx = rng.choice(256, size=rng.integers(2, 64), replace=False)
        h[idx] = rng.integers(1, 400, len(idx))
        lut = tile_lut(h, float(rng.uniform(1.0, 40.0)))
        assert np.all(np.diff(lut.astype(np.int32)) >= 0), "LUT not monotone"

    worst = 0.0
    for i in range(100):
        kind = i % 3
        r = np.random.default_rng(3000 + i)
        if kind == 0:
            img = r.integers(0, 256, (96, 96)).astype(np.uint8)
        elif kind == 1:
            base = np.linspace(40, 180, 96)[None, :] * np.ones((96, 1))
            img = np.clip(base + r.normal(0, 9, (96, 96)), 0,
                          255).astype(np.uint8)
        else:
            img = ridge_texture((96, 96), rng_for(5, i))
        out = apply_clahe(img, 2.0, 8)
        worst = max(worst, entropy_bits(img) - entropy_bits(out))
    print(f"\n[criterion 10] clahe: fixpoints hold, 200 LUTs monotone, "
          f"worst entropy drop {worst:.4f} bits")
    assert worst <= 0.01

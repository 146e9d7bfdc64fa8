"""Command-line surface: one executable, subcommand per workflow stage."""

from __future__ import annotations

import argparse
import glob
import json
import sys
from pathlib import Path

from . import capture as cap
from .config import PipelineConfig, apply_overrides, config_from_dict, load_config
from .enhancement import FingerprintImage
from .errors import ConfigError, TouchprintError
from .evaluation import (build_report, cross_compare, fta_rate, fuse_rows,
                         read_scores, scores_to_set, write_report, write_scores)
from .geometry import HandSide
from .imgio import read_image, write_image, write_mask
from .matcher import compare_templates
from .minutiae import build_template, decode_template, encode_template
from .pipeline import process_frame as run_pipeline
from .raster import to_grayscale
from .segmentation import segment_hand

FRAME_EXTENSIONS = (".png", ".ppm", ".pgm", ".jpg", ".jpeg")

_EXIT_OK = 0
_EXIT_DOMAIN = 1
_EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    """Usage failures leave the same JSON trail as every other error."""

    def error(self, message):
        _emit_error("UsageError", message)
        raise SystemExit(_EXIT_USAGE)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")


def _add_global_options(parser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", dest="config_path", metavar="JSON",
                        **({"default": None} if not suppress else d),
                        help="path to a JSON config file (env TOUCHPRINT_CONFIG as fallback)")
    parser.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                        **({"default": []} if not suppress else d),
                        help="override a config key, e.g. --set matcher.dist_tol=12")
    parser.add_argument("--seed", type=int,
                        **({"default": 0} if not suppress else d),
                        help="seed for randomized tie-breaking in synthetic helpers")


def _effective_config(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config_path", None))
    overrides = getattr(args, "overrides", None) or []
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg


def _hand_from_name(name: str) -> HandSide:
    return HandSide.LEFT if name == "left" else HandSide.RIGHT


def _load_fingerprint(path: str, finger_id: int) -> FingerprintImage:
    img = read_image(path)
    gray = to_grayscale(img) if img.ndim == 3 else img
    roi = gray > 0
    return FingerprintImage(gray=gray, roi=roi, source_finger_id=finger_id,
                            roi_size=gray.shape, roi_area=int(roi.sum()))


def _cmd_segment(args, cfg) -> int:
    img = read_image(args.image)
    mask = segment_hand(img, cfg)
    out = args.out or str(Path(args.image).with_name(Path(args.image).stem + "_mask.png"))
    write_mask(out, mask)
    print(out)
    return _EXIT_OK


def _cmd_process(args, cfg) -> int:
    img = read_image(args.image)
    fingers = run_pipeline(img, _hand_from_name(args.hand), cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for pf in fingers:
        path = out_dir / f"finger_{pf.fingerprint.source_finger_id}.png"
        write_image(str(path), pf.fingerprint.gray)
        print(path)
    return _EXIT_OK


def _cmd_extract(args, cfg) -> int:
    fp = _load_fingerprint(args.image, args.finger)
    template = build_template(fp, cfg)
    out = args.out or str(Path(args.image).with_suffix(".mtft"))
    Path(out).write_bytes(encode_template(template))
    print(out)
    return _EXIT_OK


def _cmd_match(args, cfg) -> int:
    a = decode_template(Path(args.template_a).read_bytes())
    b = decode_template(Path(args.template_b).read_bytes())
    score = compare_templates(a, b, cfg)
    print(f"{score.value:.6f}")
    return _EXIT_OK


def _frame_paths(spec: str) -> list[str]:
    p = Path(spec)
    if p.is_dir():
        paths = [str(f) for f in sorted(p.iterdir())
                 if f.suffix.lower() in FRAME_EXTENSIONS]
    else:
        paths = sorted(glob.glob(spec))
    if not paths:
        raise ConfigError(f"no frames match {spec!r}")
    return paths


def _cmd_capture_sim(args, cfg) -> int:
    paths = _frame_paths(args.frames)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    state = cap.start_session(_hand_from_name(args.hand), cfg)
    for path in paths:
        if state.status in (cap.SessionStatus.DONE, cap.SessionStatus.FAILED):
            break
        frame = read_image(path)
        state, _ = cap.process_frame(state, frame)

    log = {
        "status": state.status.name.lower(),
        "hand": args.hand,
        "frames_seen": state.frames_seen,
        "fingers": {},
    }
    done = state.status == cap.SessionStatus.DONE
    if done:
        result = cap.finalize_session(state)
        for sample, template in zip(result.samples, result.templates):
            fid = sample.fingerprint.source_finger_id
            write_image(str(out_dir / f"finger_{fid}.png"), sample.fingerprint.gray)
            (out_dir / f"finger_{fid}.mtft").write_bytes(encode_template(template))
            log["fingers"][str(fid)] = {
                "composite": sample.quality.composite,
                "sharpness": sample.quality.sharpness,
                "size_ok": sample.quality.size_ok,
                "frame_index": sample.frame_index,
            }
    log_path = out_dir / "session.json"
    log_path.write_text(json.dumps(log, indent=2, sort_keys=True) + "\n")
    print(log_path)
    if not done:
        _emit_error("CaptureFailed", f"session ended {log['status']} "
                                     f"after {state.frames_seen} frames")
        return _EXIT_DOMAIN
    return _EXIT_OK


def _cmd_evaluate(args, cfg) -> int:
    if bool(args.scores) == bool(args.templates):
        raise ConfigError("exactly one of --scores or --templates is required")
    if args.scores:
        rows = read_scores(args.scores)
    else:
        rows = cross_compare(args.templates, cfg, jobs=args.jobs)
        if args.dump_scores:
            write_scores(args.dump_scores, rows)
    if args.fuse:
        rows = fuse_rows(rows, rule=cfg.fusion.rule, fingers=args.fuse)
    ss = scores_to_set(rows)
    fta = None
    if args.attempts > 0:
        fta = fta_rate(args.attempts, args.failures)
    report = build_report(ss, cfg, fta=fta, attempts=args.attempts,
                          failures=args.failures)
    if args.out:
        write_report(report, args.out)
        print(args.out)
    else:
        payload = {
            "eer": report.eer, "eer_discrete": report.eer_discrete,
            "fta": report.fta,
            "counts": {"genuine": report.n_genuine, "impostor": report.n_impostor,
                       "attempts": report.n_attempts, "failures": report.n_failures},
        }
        print(json.dumps(payload, sort_keys=True))
    return _EXIT_OK


def _cmd_config(args, cfg) -> int:
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="touchprint",
                     description="touchless four-finger fingerprint toolkit")
    _add_global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("segment", help="hand mask from a color frame")
    _add_global_options(p, suppress=True)
    p.add_argument("image")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("process", help="four fingerprint images from a frame")
    _add_global_options(p, suppress=True)
    p.add_argument("image")
    p.add_argument("--hand", choices=("left", "right"), default="right")
    p.add_argument("--out", default=".")
    p.set_defaults(fn=_cmd_process)

    p = sub.add_parser("extract", help="minutiae template from a fingerprint image")
    _add_global_options(p, suppress=True)
    p.add_argument("image")
    p.add_argument("--finger", type=int, default=1, help="finger id 1..10")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("match", help="similarity score between two templates")
    _add_global_options(p, suppress=True)
    p.add_argument("template_a")
    p.add_argument("template_b")
    p.set_defaults(fn=_cmd_match)

    p = sub.add_parser("capture-sim", help="drive a capture session from stored frames")
    _add_global_options(p, suppress=True)
    p.add_argument("--frames", required=True, help="frame directory or glob")
    p.add_argument("--hand", choices=("left", "right"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_capture_sim)

    p = sub.add_parser("evaluate", help="error rates from scores or template dirs")
    _add_global_options(p, suppress=True)
    p.add_argument("--scores", default=None, help="score CSV")
    p.add_argument("--templates", default=None, help="directory of .mtft templates")
    p.add_argument("--fuse", type=int, choices=(4, 8), default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--attempts", type=int, default=0)
    p.add_argument("--failures", type=int, default=0)
    p.add_argument("--dump-scores", default=None, help="also write raw scores CSV")
    p.add_argument("--out", default=None, help="report JSON path")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("config", help="print the effective configuration")
    _add_global_options(p, suppress=True)
    p.set_defaults(fn=_cmd_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help(sys.stderr)
        return _EXIT_USAGE
    try:
        cfg = _effective_config(args)
        return args.fn(args, cfg)
    except ConfigError as exc:
        _emit_error("ConfigError", str(exc))
        return _EXIT_USAGE
    except OSError as exc:
        _emit_error("IoError", str(exc))
        return _EXIT_USAGE
    except json.JSONDecodeError as exc:
        _emit_error("ConfigError", f"bad config JSON: {exc}")
        return _EXIT_USAGE
    except TouchprintError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return _EXIT_DOMAIN
    except ValueError as exc:
        _emit_error("ValueError", str(exc))
        return _EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())

"""Verification error rates, score files, and evaluation reports.

Scores are similarities; a comparison is accepted when score >= threshold.
The equal error rate is read off the piecewise-linear DET trade-off in the
rate plane, so any monotone rescaling of the scores leaves it unchanged.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import PipelineConfig
from .errors import EmptyScoreSet, NoAttempts, ParseError
from .matcher import compare_templates, fuse_scores
from .minutiae import MinutiaTemplate, decode_template

SCORE_HEADER = ("probe_id", "reference_id", "finger_id", "label", "score")
LABEL_GENUINE = "genuine"
LABEL_IMPOSTOR = "impostor"
TEMPLATE_SUFFIX = ".mtft"


@dataclass(frozen=True)
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray


@dataclass(frozen=True)
class ScoreRow:
    probe_id: str
    reference_id: str
    finger_id: int
    label: str
    score: float


@dataclass(frozen=True)
class EvaluationReport:
    eer: float
    eer_discrete: float
    det: tuple[tuple[float, float], ...]
    fta: float | None
    n_genuine: int
    n_impostor: int
    n_attempts: int
    n_failures: int
    config_echo: dict


def _as_sorted(values) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=np.float64))


def _rate_arrays(ss: ScoreSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gen = _as_sorted(ss.genuine)
    imp = _as_sorted(ss.impostor)
    if gen.size == 0 or imp.size == 0:
        raise EmptyScoreSet("need at least one genuine and one impostor score")
    uniq = np.unique(np.concatenate([gen, imp]))
    thresholds = np.concatenate([[-np.inf], uniq, [np.inf]])
    fmr = (imp.size - np.searchsorted(imp, thresholds, side="left")) / imp.size
    fnmr = np.searchsorted(gen, thresholds, side="left") / gen.size
    return thresholds, fmr, fnmr


def score_rates(ss: ScoreSet) -> list[tuple[float, float, float]]:
    """(threshold, fmr, fnmr) rows; accept iff score >= threshold.

    Thresholds are the distinct scores plus -inf and +inf sentinels.
    """
    thresholds, fmr, fnmr = _rate_arrays(ss)
    return [
        (float(t), float(a), float(b)) for t, a, b in zip(thresholds, fmr, fnmr)
    ]


def equal_error_rate(ss: ScoreSet) -> float:
    """Crossing of FMR and FNMR, linearly interpolated in the rate plane."""
    _, fmr, fnmr = _rate_arrays(ss)
    d = fmr - fnmr
    k = int(np.argmax(d <= 0.0))
    if d[k] == 0.0:
        return float(fmr[k])
    alpha = d[k - 1] / (d[k - 1] - d[k])
    return float(fmr[k - 1] + alpha * (fmr[k] - fmr[k - 1]))


def eer_discrete(ss: ScoreSet) -> float:
    """min over operating points of max(FMR, FNMR)."""
    _, fmr, fnmr = _rate_arrays(ss)
    return float(np.minimum.reduce(np.maximum(fmr, fnmr), initial=1.0))


def fta_rate(attempts: int, failures: int) -> float:
    if attempts <= 0:
        raise NoAttempts("failure-to-acquire rate needs at least one attempt")
    if failures < 0 or failures > attempts:
        raise ValueError("failures must lie in [0, attempts]")
    return failures / attempts


def det_points(ss: ScoreSet) -> tuple[tuple[float, float], ...]:
    _, fmr, fnmr = _rate_arrays(ss)
    return tuple((float(a), float(b)) for a, b in zip(fmr, fnmr))


def write_scores(path: str | Path, rows: Iterable[ScoreRow]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SCORE_HEADER)
        for r in rows:
            w.writerow(
                [r.probe_id, r.reference_id, r.finger_id, r.label, f"{r.score:.17g}"]
            )


def read_scores(path: str | Path) -> list[ScoreRow]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORE_HEADER:
            raise ParseError(f"bad score header in {path}")
        for line_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 5:
                raise ParseError(f"{path}:{line_no}: expected 5 fields")
            probe, ref, fid, label, score = rec
            if label not in (LABEL_GENUINE, LABEL_IMPOSTOR):
                raise ParseError(f"{path}:{line_no}: bad label {label!r}")
            try:
                rows.append(ScoreRow(probe, ref, int(fid), label, float(score)))
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from exc
    return rows


def scores_to_set(rows: Sequence[ScoreRow]) -> ScoreSet:
    gen = [r.score for r in rows if r.label == LABEL_GENUINE]
    imp = [r.score for r in rows if r.label == LABEL_IMPOSTOR]
    return ScoreSet(genuine=np.array(gen), impostor=np.array(imp))


def fuse_rows(
    rows: Sequence[ScoreRow], rule: str = "mean", fingers: int = 4
) -> list[ScoreRow]:
    """Collapse per-finger rows for the same capture pair into one row.

    fingers=4 fuses within each hand (IDs 1-5 vs 6-10) separately;
    fingers=8 fuses all fingers of a pair together.
    """
    if fingers not in (4, 8):
        raise ValueError("fusion width must be 4 or 8 fingers")
    groups: dict[tuple, list[ScoreRow]] = {}
    for r in rows:
        key: tuple = (r.probe_id, r.reference_id)
        if fingers == 4:
            key += ("right" if r.finger_id <= 5 else "left",)
        groups.setdefault(key, []).append(r)
    fused = []
    for key, members in sorted(groups.items()):
        probe, ref = key[0], key[1]
        labels = {m.label for m in members}
        if len(labels) != 1:
            raise ParseError(f"mixed labels for pair {probe} vs {ref}")
        fused.append(
            ScoreRow(
                probe_id=probe,
                reference_id=ref,
                finger_id=0,
                label=members[0].label,
                score=fuse_scores([m.score for m in members], rule),
            )
        )
    return fused


@dataclass(frozen=True)
class _TemplateEntry:
    subject: str
    finger_id: int
    session: str
    path: Path


def _scan_templates(directory: str | Path) -> list[_TemplateEntry]:
    entries = []
    for p in sorted(Path(directory).glob(f"*{TEMPLATE_SUFFIX}")):
        parts = p.stem.rsplit("_", 2)
        if len(parts) != 3:
            raise ParseError(f"{p.name}: expected <subject>_<finger>_<session>{TEMPLATE_SUFFIX}")
        subject, fid, session = parts
        try:
            finger_id = int(fid)
        except ValueError as exc:
            raise ParseError(f"{p.name}: finger id must be an integer") from exc
        entries.append(_TemplateEntry(subject, finger_id, session, p))
    return entries


def _compare_job(
    args: tuple[MinutiaTemplate, MinutiaTemplate, PipelineConfig],
) -> float:
    ta, tb, cfg = args
    return compare_templates(ta, tb, cfg).value


def cross_compare(
    directory: str | Path, cfg: PipelineConfig, jobs: int = 1
) -> list[ScoreRow]:
    """All cross-session, same-finger comparisons in a template directory.

    Files are named <subject>_<fingerID>_<session>.mtft. Pairs with the
    same subject are genuine, different subjects impostor.
    """
    entries = _scan_templates(directory)
    templates = {e.path: decode_template(e.path.read_bytes()) for e in entries}
    tasks = []
    meta = []
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a, b = entries[i], entries[j]
            if a.finger_id != b.finger_id or a.session == b.session:
                continue
            label = LABEL_GENUINE if a.subject == b.subject else LABEL_IMPOSTOR
            tasks.append((templates[a.path], templates[b.path], cfg))
            meta.append(
                (
                    f"{a.subject}_{a.session}",
                    f"{b.subject}_{b.session}",
                    a.finger_id,
                    label,
                )
            )
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            values = list(ex.map(_compare_job, tasks, chunksize=8))
    else:
        values = [_compare_job(t) for t in tasks]
    return [
        ScoreRow(probe_id=m[0], reference_id=m[1], finger_id=m[2], label=m[3], score=v)
        for m, v in zip(meta, values)
    ]


def build_report(
    ss: ScoreSet,
    cfg: PipelineConfig,
    fta: float | None = None,
    attempts: int = 0,
    failures: int = 0,
) -> EvaluationReport:
    return EvaluationReport(
        eer=equal_error_rate(ss),
        eer_discrete=eer_discrete(ss),
        det=det_points(ss),
        fta=fta,
        n_genuine=int(np.asarray(ss.genuine).size),
        n_impostor=int(np.asarray(ss.impostor).size),
        n_attempts=attempts,
        n_failures=failures,
        config_echo=cfg.to_dict(),
    )


def write_report(
    report: EvaluationReport,
    path: str | Path,
    det_csv_path: str | Path | None = None,
) -> None:
    """JSON report at path plus the DET points as a 2-column CSV.

    The CSV lands next to the JSON with a .csv suffix unless a path is
    given explicitly.
    """
    payload = {
        "eer": report.eer,
        "eer_discrete": report.eer_discrete,
        "det": [list(p) for p in report.det],
        "fta": report.fta,
        "counts": {
            "genuine": report.n_genuine,
            "impostor": report.n_impostor,
            "attempts": report.n_attempts,
            "failures": report.n_failures,
        },
        "config": report.config_echo,
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    if det_csv_path is None:
        det_csv_path = Path(path).with_suffix(".csv")
    with open(det_csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["fmr", "fnmr"])
        for fmr, fnmr in report.det:
            w.writerow([f"{fmr:.17g}", f"{fnmr:.17g}"])

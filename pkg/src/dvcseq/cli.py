"""Batch command-line surface.

Subcommands: encode, decode, eval, baseline, transform-partition,
wikihow-extract, validate. All are deterministic given their inputs (and
--seed where applicable). Reports go to stdout; diagnostics go to stderr.
Exit codes: 0 success, 1 validation error, 2 I/O error. The DVCSEQ_LOG
environment variable (DEBUG/INFO/WARNING/ERROR) sets verbosity.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__, baselines, codec, corpus, metrics
from .alignment import index_spans_to_segments
from .errors import AnnotationFormatError, DvcseqError
from .types import CodecConfig, validate_annotation


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract is exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _codec_flags(p: argparse.ArgumentParser):
    p.add_argument("--formulation", required=True, choices=["tagging", "length"])
    p.add_argument("--setting", required=True, choices=["partition", "original"])
    p.add_argument("--mode", required=True, choices=["seg-only", "seg-cap"])
    p.add_argument("--sep-token", default="<sep>")
    p.add_argument("--pad-token", default="<pad>")
    p.add_argument("--end-token", default="<end>")


def _codec_config(args, setting=None) -> CodecConfig:
    return CodecConfig(
        formulation=args.formulation,
        setting=setting or args.setting,
        mode=args.mode.replace("-", "_"),
        sep_token=args.sep_token,
        pad_token=args.pad_token,
        end_token=args.end_token,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dvcseq", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check annotation invariants")
    p.add_argument("--input", required=True)
    p.add_argument("--allow-overlap", action="store_true",
                   help="downgrade overlapping gold segments to a warning")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("encode", help="annotations -> target-string TSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _codec_flags(p)
    p.add_argument("--allow-overlap", action="store_true")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="target-string TSV -> prediction JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report", help="write decode warnings to this JSONL file")
    p.add_argument("--spans-output", help="write raw token-index spans to this JSONL file")
    _codec_flags(p)
    p.add_argument("--allow-overlap", action="store_true")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--iou-basis", default="timestamp",
                   choices=["timestamp", "token-index"])
    p.add_argument("--thresholds", default="0.3,0.5,0.7,0.9",
                   help="comma-separated IoU thresholds")
    p.add_argument("--metrics", default="",
                   help="comma-separated caption metrics "
                        "(bleu4,rouge_l,cider_d,meteor_lite)")
    p.add_argument("--aggregation", default="macro", choices=["macro", "micro"])
    p.add_argument("--output", help="write the JSON report here")
    p.add_argument("--allow-overlap", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("baseline", help="random segmentation baselines")
    p.add_argument("--kind", required=True, choices=["partition", "segmentation"])
    p.add_argument("--gold", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=15)
    p.add_argument("--output", required=True)
    p.add_argument("--allow-overlap", action="store_true")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("transform-partition",
                       help="rewrite annotations into the gap-free layout")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--allow-overlap", action="store_true")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("wikihow-extract",
                       help="article steps -> pseudo annotations + targets")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--annotations-output",
                   help="also write the pseudo video annotations here")
    p.add_argument("--formulation", required=True, choices=["tagging", "length"])
    p.add_argument("--mode", required=True, choices=["seg-only", "seg-cap"])
    p.add_argument("--sep-token", default="<sep>")
    p.add_argument("--pad-token", default="<pad>")
    p.add_argument("--end-token", default="<end>")
    p.set_defaults(func=_cmd_wikihow)

    return parser


def _cmd_validate(args) -> int:
    clean = True
    for _line_no, ann in corpus.iter_annotations(args.input):
        violations = validate_annotation(ann)
        if args.allow_overlap:
            violations = [v for v in violations
                          if v.rule != "segments pairwise non-overlapping"]
        for v in violations:
            clean = False
            print(f"{ann.video_id}: {v}")
    if clean:
        print("ok")
    return 0 if clean else 1


def _cmd_encode(args) -> int:
    cfg = _codec_config(args)
    anns = corpus.load_annotations(args.input, allow_overlap=args.allow_overlap)
    rows = [(ann.video_id, codec.encode(ann, cfg)) for ann in anns]
    corpus.save_targets(args.output, rows)
    print(f"encoded {len(rows)} video(s) -> {args.output}")
    return 0


def _cmd_decode(args) -> int:
    cfg = _codec_config(args)
    anns = {ann.video_id: ann
            for ann in corpus.load_annotations(args.annotations,
                                               allow_overlap=args.allow_overlap)}
    rows = corpus.load_targets(args.input)
    preds = {}
    warning_records = []
    span_records = []
    n_warnings = 0
    for vid, target in rows:
        if vid not in anns:
            raise DvcseqError(f"target for unknown video_id {vid!r}; "
                              "not present in --annotations")
        ann = anns[vid]
        report = codec.decode(target, ann.transcript, cfg)
        preds[vid] = index_spans_to_segments(list(report.spans), ann.transcript)
        span_records.append({
            "video_id": vid,
            "spans": [_span_record(s) for s in report.spans],
            "warnings": [_issue_record(w) for w in report.warnings],
        })
        for w in report.warnings:
            n_warnings += 1
            warning_records.append({"video_id": vid, **_issue_record(w)})
    corpus.save_predictions(args.output, preds)
    if args.report:
        _write_jsonl(args.report, warning_records)
    if args.spans_output:
        _write_jsonl(args.spans_output, span_records)
    print(f"decoded {len(rows)} target(s) -> {args.output} ({n_warnings} warning(s))")
    return 0


def _span_record(span) -> dict:
    rec = {"start_idx": span.start_idx, "end_idx": span.end_idx}
    if span.caption is not None:
        rec["caption"] = span.caption
    return rec


def _issue_record(issue) -> dict:
    return {"kind": issue.kind, "position": issue.position, "detail": issue.detail}


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _cmd_eval(args) -> int:
    gold = corpus.load_annotations(args.gold, allow_overlap=args.allow_overlap)
    preds = corpus.load_predictions(args.pred)
    try:
        thresholds = tuple(float(x) for x in args.thresholds.split(",") if x.strip())
    except ValueError as e:
        raise DvcseqError(f"bad --thresholds value: {e}") from e
    caption_metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    try:
        cfg = metrics.EvalConfig(
            thresholds=thresholds,
            iou_basis=args.iou_basis.replace("-", "_"),
            caption_metrics=caption_metrics,
            aggregation=args.aggregation,
        )
    except ValueError as e:
        raise DvcseqError(str(e)) from e
    report = metrics.evaluate(gold, preds, cfg)
    for w in report.warnings:
        print(w, file=sys.stderr)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2)
            f.write("\n")
    print(report.format_table())
    return 0


def _cmd_baseline(args) -> int:
    gold = corpus.load_annotations(args.gold, allow_overlap=args.allow_overlap)
    cfg = baselines.BaselineConfig(n_min=args.n_min, n_max=args.n_max, seed=args.seed)
    rng = cfg.rng()
    preds = {}
    for ann in gold:
        if args.kind == "partition":
            if len(ann.transcript) == 0:
                logging.getLogger("dvcseq.cli").warning(
                    "%s: empty transcript; emitting no segments", ann.video_id)
                preds[ann.video_id] = []
                continue
            spans = baselines.random_partition(len(ann.transcript), cfg, rng)
            preds[ann.video_id] = index_spans_to_segments(spans, ann.transcript)
        else:
            if ann.duration <= 0:
                logging.getLogger("dvcseq.cli").warning(
                    "%s: zero duration; emitting no segments", ann.video_id)
                preds[ann.video_id] = []
                continue
            preds[ann.video_id] = baselines.random_segmentation(ann.duration, cfg, rng)
    corpus.save_predictions(args.output, preds)
    print(f"wrote {args.kind} baseline for {len(preds)} video(s) -> {args.output}")
    return 0


def _cmd_transform(args) -> int:
    anns = corpus.load_annotations(args.input, allow_overlap=args.allow_overlap)
    corpus.save_annotations(args.output, (corpus.to_partition_setting(a) for a in anns))
    print(f"transformed {len(anns)} video(s) -> {args.output}")
    return 0


def _cmd_wikihow(args) -> int:
    cfg = CodecConfig(
        formulation=args.formulation,
        setting="partition",
        mode=args.mode.replace("-", "_"),
        sep_token=args.sep_token,
        pad_token=args.pad_token,
        end_token=args.end_token,
    )
    articles = corpus.load_wikihow(args.input)
    extractions = [corpus.extract_wikihow(a, cfg) for a in articles]
    corpus.save_targets(args.output,
                        [(e.annotation.video_id, e.target) for e in extractions])
    if args.annotations_output:
        corpus.save_annotations(args.annotations_output,
                                (e.annotation for e in extractions))
    print(f"extracted {len(extractions)} article(s) -> {args.output}")
    return 0


def main(argv=None) -> int:
    level = os.environ.get("DVCSEQ_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AnnotationFormatError, OSError) as e:
        print(f"dvcseq: i/o error: {e}", file=sys.stderr)
        return 2
    except (DvcseqError, ValueError) as e:
        print(f"dvcseq: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 finished with per-entry failures,
3 fatal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .adapters import resolve_adapter
from .audio import read_wav, write_wav
from .augment import AugmentRecipe, apply_recipe
from .enhance import WienerConfig, wiener_enhance
from .errors import CascadeKitError
from .fusion import Hypothesis, VoteConfig, rover
from .manifest import read_manifest, write_manifest
from .metrics import align_tokens, asr_bleu, corpus_bleu
from .pipeline import PipelineConfig, run_pipeline
from .textnorm import (
    FillerLexicon,
    default_lexicon,
    remove_fillers,
    strip_punctuation,
    to_asr_format,
    tokenize,
)
from .vad import VadConfig, detect, extract_noise_set

OK, USAGE, PARTIAL, FATAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cascade-kit",
        description="Deterministic building blocks for cascaded speech translation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run the full cascade over a manifest")
    sp.add_argument("--config", required=True, help="pipeline config JSON")
    sp.add_argument("--manifest", required=True, help="input manifest (JSON lines)")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("augment", help="materialize an augmentation recipe")
    sp.add_argument("--recipe", required=True, help="recipe JSON")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out-dir", required=True)

    sp = sub.add_parser("vad", help="segment audio into vocal / non-vocal spans")
    sp.add_argument("--in", dest="input", help="a single WAV file")
    sp.add_argument("--manifest", help="or a manifest of WAVs")
    sp.add_argument("--out", help="segments JSON lines (default stdout)")
    sp.add_argument("--harvest-noise", metavar="DIR", help="also write qualifying noise WAVs here")
    sp.add_argument("--energy-threshold-db", type=float, default=-50.0)
    sp.add_argument("--min-len", type=float, default=0.5)
    sp.add_argument("--lrt-threshold", type=float, default=0.15)
    sp.add_argument("--hangover-frames", type=int, default=8)

    sp = sub.add_parser("enhance", help="suppress stationary noise")
    sp.add_argument("--in", dest="input", help="a single WAV file")
    sp.add_argument("--out", help="output WAV for --in")
    sp.add_argument("--manifest", help="or a manifest of WAVs")
    sp.add_argument("--out-dir", help="output directory for --manifest")
    sp.add_argument("--gain-floor", type=float, default=0.1)
    sp.add_argument(
        "--noise-estimation", choices=("initial_frames", "vad_guided"), default="initial_frames"
    )

    sp = sub.add_parser("norm", help="normalize transcripts")
    sp.add_argument("--in", dest="input", required=True, help="UTF-8 text, one utterance per line")
    sp.add_argument("--out", help="default stdout")
    sp.add_argument("--fillers", help="filler lexicon file (default: built-in)")
    sp.add_argument("--asr-format", action="store_true", help="also apply transcript formatting")
    sp.add_argument("--numbers", choices=("spell", "keep", "drop"), default="spell")

    sp = sub.add_parser("fuse", help="combine transcripts from several systems")
    sp.add_argument("inputs", nargs="+", help="JSON-lines files: {utt, tokens|text, confidences?}")
    sp.add_argument("--out", help="default stdout")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--null-confidence", type=float, default=0.5)
    sp.add_argument(
        "--tie-break", choices=("prefer_word", "prefer_null", "lowest_system"), default="prefer_word"
    )

    sp = sub.add_parser("score", help="evaluate hypotheses against references")
    sp.add_argument("--metric", choices=("wer", "cer", "bleu", "asr-bleu"), required=True)
    sp.add_argument("--refs", required=True, help="JSON lines: {utt, text}")
    sp.add_argument("--hyps", required=True, help="JSON lines: {utt, text}; a manifest for asr-bleu")
    sp.add_argument("--tokenizer", choices=("chars", "words"), default="chars", help="bleu only")
    sp.add_argument("--no-normalize", action="store_true")
    sp.add_argument("--asr-config", help="adapter spec JSON for asr-bleu")
    sp.add_argument("--per-utt", action="store_true")
    return p


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        config = PipelineConfig.from_dict(json.load(fh))
    entries = read_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_pipeline(entries, config, workers=args.workers, out_dir=out_dir)
    with open(out_dir / "results.jsonl", "w", encoding="utf-8") as fh:
        for r in results:
            d = r.to_dict()
            if d.get("audio_path"):
                # relative to the results file, so the directory can move
                d["audio_path"] = os.path.relpath(d["audio_path"], out_dir)
            fh.write(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n")
    failed = [r for r in results if not r.ok]
    print(f"processed {len(results)} utterances, {len(failed)} failed")
    for r in failed:
        print(f"  {r.utt_id}: {r.failed_stage}: {r.error}", file=sys.stderr)
    return PARTIAL if failed else OK


def _cmd_augment(args) -> int:
    with open(args.recipe, encoding="utf-8") as fh:
        recipe = AugmentRecipe.from_dict(json.load(fh))
    entries = read_manifest(args.manifest)
    failures: list = []
    out_entries = apply_recipe(entries, recipe, args.out_dir, failures)
    write_manifest(out_entries, Path(args.out_dir) / "manifest.jsonl")
    print(f"wrote {len(out_entries)} entries, {len(failures)} failures")
    for utt, msg in failures:
        print(f"  {utt}: {msg}", file=sys.stderr)
    return PARTIAL if failures else OK


def _iter_audio(args):
    if args.input:
        yield Path(args.input).stem, args.input
    elif args.manifest:
        for entry in read_manifest(args.manifest):
            if entry.audio_path:
                yield entry.utt_id, entry.audio_path
    else:
        raise _Usage("one of --in or --manifest is required")


def _cmd_vad(args) -> int:
    config = VadConfig(lrt_threshold=args.lrt_threshold, hangover_frames=args.hangover_frames)
    harvest_dir = None
    if args.harvest_noise:
        harvest_dir = Path(args.harvest_noise)
        harvest_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    failures = 0
    for utt, path in _iter_audio(args):
        try:
            buf = read_wav(path)
            for seg in detect(buf, config):
                lines.append(
                    {"utt": utt, "start": seg.start, "end": seg.end, "label": seg.label}
                )
            if harvest_dir is not None:
                cuts = extract_noise_set(buf, config, args.energy_threshold_db, args.min_len)
                for i, cut in enumerate(cuts):
                    write_wav(cut, harvest_dir / f"{utt}-noise{i:03d}.wav")
        except (CascadeKitError, OSError) as exc:
            print(f"  {utt}: {exc}", file=sys.stderr)
            failures += 1
    _write_jsonl(lines, args.out)
    return PARTIAL if failures else OK


def _cmd_enhance(args) -> int:
    config = WienerConfig(gain_floor=args.gain_floor, noise_estimation=args.noise_estimation)
    if args.input:
        if not args.out:
            raise _Usage("--out is required with --in")
        write_wav(wiener_enhance(read_wav(args.input), config), args.out)
        return OK
    if not args.manifest or not args.out_dir:
        raise _Usage("need --in/--out or --manifest/--out-dir")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for entry in read_manifest(args.manifest):
        if not entry.audio_path:
            continue
        try:
            write_wav(wiener_enhance(read_wav(entry.audio_path), config), out_dir / f"{entry.utt_id}.wav")
        except (CascadeKitError, OSError) as exc:
            print(f"  {entry.utt_id}: {exc}", file=sys.stderr)
            failures += 1
    return PARTIAL if failures else OK


def _cmd_norm(args) -> int:
    lexicon = FillerLexicon.from_file(args.fillers) if args.fillers else default_lexicon()
    out_lines = []
    with open(args.input, encoding="utf-8") as fh:
        for line in fh:
            text = line.rstrip("\n")
            if args.asr_format:
                text = to_asr_format(text, numbers=args.numbers).text
            text = remove_fillers(text, lexicon)
            out_lines.append(text)
    payload = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return OK


def _read_hyp_file(path, system_id):
    hyps = {}
    order = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            utt = row["utt"]
            tokens = row.get("tokens")
            if tokens is None:
                tokens = str(row.get("text", "")).split()
            hyps[utt] = Hypothesis(
                tuple(tokens), tuple(row.get("confidences", ())), system_id=system_id
            )
            order.append(utt)
    return hyps, order


def _cmd_fuse(args) -> int:
    config = VoteConfig(
        alpha=args.alpha, null_confidence=args.null_confidence, tie_break=args.tie_break
    )
    systems = []
    order = []
    for i, path in enumerate(args.inputs):
        hyps, file_order = _read_hyp_file(path, i)
        systems.append(hyps)
        if i == 0:
            order = file_order
    missing = 0
    lines = []
    for utt in order:
        per_system = [s[utt] for s in systems if utt in s]
        if len(per_system) != len(systems):
            print(f"  {utt}: present in only {len(per_system)}/{len(systems)} inputs", file=sys.stderr)
            missing += 1
            continue
        fused = rover(per_system, config)
        lines.append(
            {
                "utt": utt,
                "text": fused.text,
                "tokens": list(fused.tokens),
                "confidences": list(fused.confidences),
            }
        )
    _write_jsonl(lines, args.out)
    return PARTIAL if missing else OK


def _read_text_table(path):
    table = {}
    order = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            table[row["utt"]] = str(row.get("text", ""))
            order.append(row["utt"])
    return table, order


def _cmd_score(args) -> int:
    refs, order = _read_text_table(args.refs)
    report = {"metric": args.metric}
    per_utt = {}
    failures: list = []

    if args.metric == "asr-bleu":
        if not args.asr_config:
            raise _Usage("--asr-config is required for asr-bleu")
        with open(args.asr_config, encoding="utf-8") as fh:
            asr = resolve_adapter(json.load(fh))
        entries = {e.utt_id: e for e in read_manifest(args.hyps)}
        missing = [u for u in order if u not in entries]
        if missing:
            raise CascadeKitError(f"hypothesis manifest is missing utterances: {missing[:5]}")
        audio = [read_wav(entries[u].audio_path) for u in order]
        ref_tokens = [tokenize(refs[u], "chars") for u in order]
        bleu = asr_bleu(asr, audio, ref_tokens, failures)
        report.update(
            value=bleu.score,
            precisions=list(bleu.precisions),
            brevity_penalty=bleu.brevity_penalty,
            failed_utterances=len(failures),
        )
    else:
        hyps, _ = _read_text_table(args.hyps)
        missing = [u for u in order if u not in hyps]
        if missing:
            raise CascadeKitError(f"hypothesis file is missing utterances: {missing[:5]}")
        if args.metric == "bleu":
            pairs = [
                (tokenize(refs[u], args.tokenizer), tokenize(hyps[u], args.tokenizer))
                for u in order
            ]
            bleu = corpus_bleu([r for r, _ in pairs], [h for _, h in pairs])
            report.update(
                value=bleu.score,
                precisions=list(bleu.precisions),
                brevity_penalty=bleu.brevity_penalty,
            )
        else:
            total_err = total_ref = 0
            for u in order:
                ref, hyp = refs[u], hyps[u]
                if args.metric == "wer":
                    if not args.no_normalize:
                        ref = to_asr_format(ref).text
                        hyp = to_asr_format(hyp).text
                    rt, ht = tokenize(ref, "words"), tokenize(hyp, "words")
                else:
                    if not args.no_normalize:
                        ref = strip_punctuation(ref)
                        hyp = strip_punctuation(hyp)
                    rt, ht = tokenize(ref, "chars"), tokenize(hyp, "chars")
                stats = align_tokens(rt, ht)
                if stats.ref_len == 0:
                    raise CascadeKitError(f"{u}: empty reference after normalization")
                total_err += stats.errors
                total_ref += stats.ref_len
                per_utt[u] = stats.errors / stats.ref_len
            report["value"] = total_err / total_ref

    if args.per_utt and per_utt:
        report["per_utt"] = per_utt
    print(json.dumps(report, ensure_ascii=False))
    return PARTIAL if failures else OK


def _write_jsonl(rows, out_path):
    text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


class _Usage(Exception):
    pass


_DISPATCH = {
    "run": _cmd_run,
    "augment": _cmd_augment,
    "vad": _cmd_vad,
    "enhance": _cmd_enhance,
    "norm": _cmd_norm,
    "fuse": _cmd_fuse,
    "score": _cmd_score,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code in (0, None) else USAGE
    try:
        return _DISPATCH[args.command](args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE
    except (CascadeKitError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FATAL


if __name__ == "__main__":
    sys.exit(main())

"""Batch command-line interface: parse, embed, induce, evaluate.

Subcommands are decomposed so expensive embedding is cacheable and the
evaluator is reusable against other systems' induced schemas.  Exit codes:
1 validation problem, 2 backend failure, 3 I/O failure; each failure
prints a single diagnostic line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import evaluation
from .candidates import load_corpus, parse_state_update, parse_state_update_lenient, write_candidates
from .embedding import EmbedderConfig, embed_batch, render_candidate_text, write_vector_file
from .errors import BackendError, CorpusFormatError, ValidationError
from .evaluation import evaluate_schema, load_annotations, load_gold_schema, render_text_table, write_report
from .hdbscan import ClusterParams
from .induction import induce_schema, read_schema, write_schema

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; remap onto the validation code.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_VALIDATION, message)


def _add_embedder_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--embedder",
        default="hashed",
        help="embedding backend: hashed, file, or remote (default: hashed)",
    )
    parser.add_argument(
        "--dim", type=int, default=256, help="hashed backend dimension (default: 256)"
    )
    parser.add_argument(
        "--vectors", default=None, help="precomputed-vector file (file backend)"
    )
    parser.add_argument(
        "--endpoint", default=None, help="embedding endpoint URL (remote backend)"
    )
    parser.add_argument(
        "--no-normalize",
        action="store_true",
        help="skip unit-norm scaling of embeddings (default: normalize)",
    )
    parser.add_argument(
        "--batch-size",
        type=int,
        default=64,
        help="remote request batch size (default: 64)",
    )


def _embedder_from_args(args) -> EmbedderConfig:
    try:
        return EmbedderConfig(
            backend=args.embedder,
            dim=args.dim,
            normalize=not args.no_normalize,
            path=args.vectors,
            endpoint=args.endpoint,
            batch_size=args.batch_size,
        )
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc))


def _add_cluster_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--min-samples", type=int, default=5, help="core-distance neighbor count (default: 5)"
    )
    parser.add_argument(
        "--min-cluster-size", type=int, default=25, help="minimum cluster size (default: 25)"
    )
    parser.add_argument(
        "--merge-epsilon", type=float, default=0.3, help="cluster merge distance floor (default: 0.3)"
    )


def _params_from_args(args) -> ClusterParams:
    try:
        return ClusterParams(
            min_samples=args.min_samples,
            min_cluster_size=args.min_cluster_size,
            merge_epsilon=args.merge_epsilon,
        )
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc))


def cmd_parse(args) -> int:
    records = []
    skipped = 0
    with open(args.input, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                dialogue_id = record["dialogue_id"]
                turn_index = record["turn_index"]
                sequence = record["sequence"]
            except (ValueError, KeyError, TypeError):
                raise CorpusFormatError(args.input, line_no, "malformed sequence record")
            if args.mode == "strict":
                try:
                    pairs = parse_state_update(sequence)
                except ValidationError as exc:
                    raise CliError(
                        EXIT_VALIDATION, f"{args.input}:{line_no}: {exc}"
                    )
            else:
                pairs, bad = parse_state_update_lenient(sequence)
                skipped += len(bad)
            for slot, value in pairs:
                records.append((dialogue_id, turn_index, slot, value))
    write_candidates(args.out, records)
    print(f"candidates={len(records)} malformed_skipped={skipped}")
    return EXIT_OK


def cmd_embed(args) -> int:
    corpus = load_corpus(args.candidates)
    if not corpus.candidates:
        raise CliError(EXIT_VALIDATION, "no candidates to embed")
    config = _embedder_from_args(args)
    texts = [render_candidate_text(c.slot_name, c.value) for c in corpus.candidates]
    # one vector per distinct text; the file backend is keyed by text
    distinct = list(dict.fromkeys(texts))
    matrix = embed_batch(config, distinct, workers=args.workers)
    write_vector_file(args.out, distinct, matrix)
    print(f"texts={len(distinct)} dim={matrix.shape[1]}")
    return EXIT_OK


def cmd_induce(args) -> int:
    corpus = load_corpus(args.candidates, args.turns)
    if not corpus.candidates:
        raise CliError(EXIT_VALIDATION, "no candidates to cluster")
    config = _embedder_from_args(args)
    params = _params_from_args(args)
    schema = induce_schema(corpus, config, params, workers=args.workers)
    write_schema(schema, args.out)
    if args.unique_values:
        for c in schema.clusters:
            distinct = ", ".join(dict.fromkeys(c.values))
            print(f"[{c.cluster_id}] {c.name}: {distinct}")
    print(
        f"clusters={len(schema.clusters)} noise={len(schema.noise)} "
        f"candidates={len(corpus.candidates)}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    schema = read_schema(args.induced)
    gold = load_gold_schema(args.gold)
    if args.embedder is not None:
        config = _embedder_from_args(args)
    else:
        try:
            config = EmbedderConfig.from_descriptor(schema.embedder)
        except (ValueError, TypeError) as exc:
            raise CliError(EXIT_VALIDATION, f"schema embedder descriptor: {exc}")
    annotations = load_annotations(args.annotations) if args.annotations else None
    report = evaluate_schema(
        schema,
        gold,
        config,
        sim_threshold=args.sim_threshold,
        fuzzy_threshold=args.fuzzy_threshold,
        exact_values=args.exact_values,
        annotations=annotations,
        workers=args.workers,
    )
    if args.out:
        write_report(report, args.out, fmt=args.format)
    sys.stdout.write(render_text_table(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssikit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[], help="parse raw generator sequences into a candidates file")
    p.add_argument("--input", required=True, help="JSONL of {dialogue_id, turn_index, sequence}")
    p.add_argument("--out", required=True, help="candidates file to write")
    p.add_argument(
        "--mode",
        choices=("lenient", "strict"),
        default="lenient",
        help="malformed pairs: skip with a counter, or fail (default: lenient)",
    )
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("embed", help="materialize candidate vectors for the file backend")
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True, help="vector file to write")
    p.add_argument("--workers", type=int, default=1, help="embedding worker count (default: 1)")
    _add_embedder_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("induce", help="induce a slot schema from a candidates file")
    p.add_argument("--candidates", required=True)
    p.add_argument("--turns", default=None, help="optional turns file")
    p.add_argument("--out", required=True, help="schema file to write")
    p.add_argument("--workers", type=int, default=1, help="embedding worker count (default: 1)")
    p.add_argument(
        "--unique-values",
        action="store_true",
        help="print each cluster's deduplicated values after induction",
    )
    _add_embedder_flags(p)
    _add_cluster_flags(p)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("evaluate", help="score an induced schema against a gold schema")
    p.add_argument("--induced", required=True, help="induced schema file")
    p.add_argument("--gold", required=True, help="gold schema file")
    p.add_argument("--sim-threshold", type=float, default=evaluation.SIM_THRESHOLD,
                   help="centroid cosine cutoff (default: 0.8)")
    p.add_argument("--fuzzy-threshold", type=float, default=evaluation.FUZZY_THRESHOLD,
                   help="fuzzy value-match cutoff (default: 0.9)")
    p.add_argument("--exact-values", action="store_true",
                   help="replace fuzzy value matching with normalized equality")
    p.add_argument("--annotations", nargs="+", default=None,
                   help="annotation files (completeness and/or correctness)")
    p.add_argument("--out", default=None, help="report file to write")
    p.add_argument("--format", choices=("machine", "text-table"), default="machine",
                   help="report file format (default: machine)")
    p.add_argument("--workers", type=int, default=1, help="embedding worker count (default: 1)")
    p.add_argument("--embedder", default=None,
                   help="override the schema's embedder: hashed, file, or remote")
    p.add_argument("--dim", type=int, default=256, help="hashed backend dimension (default: 256)")
    p.add_argument("--vectors", default=None, help="precomputed-vector file (file backend)")
    p.add_argument("--endpoint", default=None, help="embedding endpoint URL (remote backend)")
    p.add_argument("--no-normalize", action="store_true",
                   help="skip unit-norm scaling of embeddings (default: normalize)")
    p.add_argument("--batch-size", type=int, default=64,
                   help="remote request batch size (default: 64)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"ssikit: {exc.message}", file=sys.stderr)
        return exc.code
    except ValidationError as exc:
        print(f"ssikit: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BackendError as exc:
        print(f"ssikit: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"ssikit: {exc}", file=sys.stderr)
        return EXIT_IO

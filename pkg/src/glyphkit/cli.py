"""Command-line interface over the toolkit.

Conventions:

* exit 0 on success, 1 when a query legitimately has no results (e.g. stats
  before any attempt fooled the model), 2 for usage, parse, and validation
  errors;
* in structured mode stdout carries only records (JSON lines, or TSV for
  stats); all diagnostics go to stderr;
* ``perturb``, ``inject`` and ``template`` write raw text to stdout with no
  added trailing newline so piping into a clipboard tool is byte-exact.

Every flag with a GLYPHKIT_* environment twin falls back to it, which keeps
repeated invocations over one corpus/session short.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import homoglyphs, llm, perturb, probe, questions, session

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_USAGE = 2

HUMAN = "human"
STRUCTURED = "structured"


class CliError(Exception):
    """Usage or validation failure; maps to exit code 2."""


class EmptyResult(Exception):
    """Domain-empty result; maps to exit code 1."""


def _env(name: str) -> str | None:
    return os.environ.get(f"GLYPHKIT_{name}") or None


def _say(message: str):
    print(message, file=sys.stderr)


def _emit_json(record: dict):
    sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")


def _write_raw(text: str):
    sys.stdout.buffer.write(text.encode("utf-8"))
    sys.stdout.buffer.flush()


def _require(value, what: str):
    if not value:
        raise CliError(f"{what} is required (flag or GLYPHKIT_* environment variable)")
    return value


def _load_db(args) -> homoglyphs.HomoglyphDatabase:
    path = _require(args.db, "--db")
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read database file: {exc}") from exc
    fmt = getattr(args, "db_format", "auto")
    if fmt == "auto":
        fmt = homoglyphs.detect_format(data)
    return homoglyphs.parse_homoglyph_file(data, fmt)


def _load_corpus(args) -> list[questions.Question]:
    path = _require(args.corpus, "--corpus")
    try:
        return questions.load_corpus(path)
    except OSError as exc:
        raise CliError(f"cannot read corpus: {exc}") from exc


def _resolve_text(args) -> str:
    """Text from --text, --question (against the corpus), or stdin."""
    if getattr(args, "text", None) is not None:
        return args.text
    if getattr(args, "question", None):
        corpus = _load_corpus(args)
        for q in corpus:
            if q.id == args.question:
                return q.text
        raise CliError(f"question id {args.question!r} not found in corpus")
    if getattr(args, "text_file", None):
        try:
            data = Path(args.text_file).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read text file: {exc}") from exc
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CliError(f"text file is not UTF-8: {exc}") from exc
    if sys.stdin.isatty():
        raise CliError("no input text: pass --text, --question, or pipe stdin")
    return sys.stdin.buffer.read().decode("utf-8")


def _codepoint_arg(args) -> int:
    if args.codepoint:
        try:
            return homoglyphs.parse_codepoint(args.codepoint)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    if args.char:
        if len(args.char) != 1:
            raise CliError("--char wants exactly one character")
        return ord(args.char)
    raise CliError("pass --codepoint HEX or --char C")


def _make_provider(args):
    """Provider object from --mock/--mock-script/--provider."""
    if getattr(args, "mock_script", None):
        try:
            script = json.loads(Path(args.mock_script).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read mock script: {exc}") from exc
        if not isinstance(script, dict):
            raise CliError("mock script must be a JSON object of prompt -> reply")
        return llm.make_mock_provider(script)
    if getattr(args, "mock", False):
        return llm.make_mock_provider(echo=True)
    name = getattr(args, "provider", None)
    if not name:
        raise CliError("pass --provider NAME or --mock")
    config = llm.DEFAULT_PROVIDERS.get(name)
    if config is None:
        known = ", ".join(sorted(llm.DEFAULT_PROVIDERS))
        raise CliError(f"unknown provider {name!r} (known: {known})")
    return llm.HttpProvider(config)


def _fmt_num(value) -> str:
    return f"{value:g}" if isinstance(value, float) else str(value)


# --- subcommands --------------------------------------------------------


def cmd_db_inspect(args) -> int:
    db = _load_db(args)
    if args.format == STRUCTURED:
        _emit_json(
            {
                "record": "db_summary",
                "groups": len(db),
                "merged_groups": db.merged_group_count,
                "skipped_rows": db.skipped_rows,
            }
        )
        for group in db.groups:
            _emit_json(
                {
                    "record": "group",
                    "id": group.id,
                    "canonical": homoglyphs.format_codepoint(group.canonical),
                    "members": [homoglyphs.format_codepoint(m) for m in group.members],
                }
            )
    else:
        print(f"groups: {len(db)}")
        print(f"merged groups: {db.merged_group_count}")
        print(f"skipped rows: {db.skipped_rows}")
        for group in db.groups:
            members = " ".join(
                f"U+{homoglyphs.format_codepoint(m)}" for m in group.members
            )
            print(
                f"  {group.id}  canonical "
                f"{chr(group.canonical)!r}  members {members}"
            )
    return EXIT_OK


def cmd_suggest(args) -> int:
    text = _resolve_text(args)
    suggestions = perturb.suggest_targets(text)
    if not suggestions:
        _say("no digits to classify")
        return EXIT_OK
    for s in suggestions:
        if args.format == STRUCTURED:
            _emit_json(
                {
                    "record": "target",
                    "position": s.position,
                    "char": chr(s.codepoint),
                    "codepoint": homoglyphs.format_codepoint(s.codepoint),
                    "role": s.role.value,
                    "rationale": s.rationale,
                }
            )
        else:
            print(
                f"pos {s.position:>4}  {chr(s.codepoint)!r}  "
                f"{s.role.value:<10}  {s.rationale}"
            )
    return EXIT_OK


def cmd_perturb(args) -> int:
    db = _load_db(args)
    try:
        plan = perturb.load_plan(args.plan)
    except OSError as exc:
        raise CliError(f"cannot read plan: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"invalid plan file: {exc}") from exc
    text = _resolve_text(args)
    violations = perturb.validate_plan(db, text, plan)
    if violations:
        for v in violations:
            where = "plan" if v.position is None else f"position {v.position}"
            _say(f"violation [{v.rule}] at {where}: {v.message}")
        return EXIT_USAGE
    _write_raw(perturb.apply_plan(db, text, plan))
    return EXIT_OK


def cmd_probe(args) -> int:
    codepoint = _codepoint_arg(args)
    try:
        prompt = probe.make_probe_prompt(codepoint)
    except probe.UnprintableError as exc:
        raise CliError(str(exc)) from exc
    provider = _make_provider(args)
    exchange = llm.send_prompt(provider, prompt)

    db = None
    if args.db:
        db = _load_db(args)
    auto = False
    if args.verdict:
        verdict = probe.ProbeVerdict(args.verdict)
    elif not exchange.succeeded:
        # Nothing came back to judge; record the failed transport as data.
        verdict, auto = probe.ProbeVerdict.UNCLEAR, True
    elif args.auto:
        verdict, auto = probe.auto_verdict(db, codepoint, exchange.response_text), True
    elif sys.stdin.isatty():
        _say(f"response: {exchange.response_text}")
        answer = ""
        while answer not in ("recognized", "unrecognized", "unclear"):
            answer = input("verdict [recognized/unrecognized/unclear]: ").strip()
        verdict = probe.ProbeVerdict(answer)
    else:
        raise CliError("pass --verdict or --auto when not running interactively")

    result = probe.probe_from_exchange(codepoint, exchange, verdict, auto=auto)
    if args.session:
        store = session.SessionStore(args.session)
        store.record_probe(result)
    else:
        _say("no --session given; probe result not persisted")

    if args.format == STRUCTURED:
        record = probe.probe_to_record(result)
        record["transport_status"] = exchange.transport_status.value
        _emit_json(record)
    else:
        print(f"prompt: {prompt}")
        print(f"transport: {exchange.transport_status.value}")
        print(f"response: {exchange.response_text}")
        print(f"verdict: {verdict.value}" + (" (auto)" if auto else ""))
    return EXIT_OK


def _stats_rows(args) -> list[tuple[str, str, session.SummaryStats]]:
    """(table, model, stats) rows for the stats command."""
    if args.reference:
        ref = session.load_reference_stats()
        rows = [("question_chars", "-", ref["question_chars"])]
        for table in ("attempts_to_fool", "perturbed_chars"):
            for model, stats in sorted(ref[table].items()):
                if args.model and model != args.model:
                    continue
                rows.append((table, model, stats))
        return rows

    path = _require(args.session, "--session")
    if not Path(path).exists():
        raise CliError(f"session log {path} does not exist")
    store = session.SessionStore(path)
    model = _require(args.model, "--model")
    try:
        rows = [
            ("attempts_to_fool", model, store.attempts_to_fool(model)),
            ("perturbed_chars", model, store.perturbed_chars_stats(model)),
        ]
    except session.NoFooledAttempts as exc:
        message = str(exc)
        if exc.questions:
            message += " (questions: " + ", ".join(exc.questions) + ")"
        raise EmptyResult(message) from exc

    if args.corpus:
        corpus = _load_corpus(args)
        if corpus:
            rows.append(("question_chars", "-", questions.question_stats(corpus)))
    else:
        lengths = _session_question_lengths(store)
        if lengths:
            rows.append(("question_chars", "-", session.summarize(lengths)))
    return rows


def _session_question_lengths(store: session.SessionStore) -> list[int]:
    seen: dict[str, int] = {}
    for attempt in store.attempts():
        seen.setdefault(attempt.question_id, len(attempt.source_text))
    return [seen[qid] for qid in sorted(seen)]


def _stats_tsv(rows) -> str:
    lines = ["table\tmodel\tn\tmin\tmax\tmean\tstd"]
    for table, model, s in rows:
        lines.append(
            "\t".join(
                [
                    table,
                    model,
                    str(s.n),
                    _fmt_num(s.min),
                    _fmt_num(s.max),
                    _fmt_num(s.mean),
                    _fmt_num(s.std),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def cmd_stats(args) -> int:
    rows = _stats_rows(args)
    output = _stats_tsv(rows)
    if args.format == STRUCTURED:
        sys.stdout.write(output)
    else:
        for table, model, s in rows:
            print(
                f"{table} (model={model}): n={s.n} min={_fmt_num(s.min)} "
                f"max={_fmt_num(s.max)} mean={_fmt_num(s.mean)} "
                f"std={_fmt_num(s.std)}"
            )
    if args.report_dir:
        from . import report  # matplotlib import deferred to the report path

        out_dir = Path(args.report_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "stats.tsv").write_text(output, encoding="utf-8")
        written = [out_dir / "stats.tsv"]
        if not args.reference:
            store = session.SessionStore(args.session)
            lengths = None
            if args.corpus:
                lengths = [q.char_count for q in _load_corpus(args)]
            else:
                lengths = _session_question_lengths(store)
            written += report.render_session_figures(
                store, args.model, out_dir, question_chars=lengths
            )
        for path in written:
            _say(f"wrote {path}")
    return EXIT_OK


def cmd_inject(args) -> int:
    text = _resolve_text(args)
    out = questions.inject_coefficient(
        text, args.variable, args.coefficient, occurrence=args.occurrence
    )
    _write_raw(out)
    return EXIT_OK


def cmd_template(args) -> int:
    text = _resolve_text(args)
    bindings = []
    for raw in args.bind:
        letter, sep, phrase = raw.partition("=")
        if not sep or not phrase:
            raise CliError(f"--bind wants LETTER=PHRASE, got {raw!r}")
        bindings.append((letter, phrase))
    out = questions.variable_template(
        text, bindings, math_delimiters=args.math_delimiters
    )
    _write_raw(out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        db_path=args.db,
        session_path=args.session,
        corpus_path=args.corpus,
        mock=args.mock,
        ui_dir=args.ui_dir,
        max_upload_bytes=args.max_upload_bytes,
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return EXIT_OK


# --- parser -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glyphkit",
        description=(
            "Homoglyph perturbation toolkit: parse confusables data, plan "
            "minimal character substitutions, probe model recognizability, "
            "and track fooling sessions."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument(
            "--format",
            choices=(HUMAN, STRUCTURED),
            default=_env("FORMAT") or HUMAN,
            help="human output or machine-readable records",
        )

    def add_db(p):
        p.add_argument("--db", default=_env("DB"), help="homoglyph database file")
        p.add_argument(
            "--db-format",
            choices=("auto", homoglyphs.GROUP_LINES, homoglyphs.CONFUSABLES),
            default="auto",
        )

    def add_text_source(p, with_file=True):
        p.add_argument("--text", help="literal input text")
        p.add_argument("--question", help="question id to pull from the corpus")
        p.add_argument(
            "--corpus", default=_env("CORPUS"), help="JSONL question corpus"
        )
        if with_file:
            p.add_argument("--text-file", help="read input text from a file")

    p = sub.add_parser("db-inspect", help="parse a database and report its shape")
    add_db(p)
    add_format(p)
    p.set_defaults(func=cmd_db_inspect)

    p = sub.add_parser("suggest", help="classify digits as perturbation targets")
    add_text_source(p)
    add_format(p)
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("perturb", help="apply a plan file; raw result on stdout")
    add_db(p)
    add_text_source(p)
    p.add_argument("--plan", required=True, help="perturbation plan JSON file")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("probe", help="ask a provider what one glyph is")
    p.add_argument("--codepoint", help="hex codepoint, e.g. 1D7D5")
    p.add_argument("--char", help="the literal character")
    p.add_argument("--provider", default=_env("PROVIDER"))
    p.add_argument("--mock", action="store_true", default=bool(_env("MOCK")))
    p.add_argument("--mock-script", help="JSON file of prompt -> canned reply")
    p.add_argument("--session", default=_env("SESSION"), help="session log JSONL")
    p.add_argument(
        "--verdict", choices=[v.value for v in probe.ProbeVerdict], default=None
    )
    p.add_argument(
        "--auto", action="store_true", help="judge the response automatically"
    )
    add_db(p)
    add_format(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("stats", help="summary statistics over a session log")
    p.add_argument("--session", default=_env("SESSION"))
    p.add_argument("--model", default=None)
    p.add_argument("--corpus", default=_env("CORPUS"))
    p.add_argument(
        "--reference",
        action="store_true",
        help="print the bundled reference records instead of recomputing",
    )
    p.add_argument(
        "--report-dir", default=None, help="also write stats.tsv and histogram PNGs"
    )
    add_format(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("inject", help="insert a coefficient before a variable")
    add_text_source(p)
    p.add_argument("--variable", required=True)
    p.add_argument("--coefficient", required=True)
    p.add_argument("--occurrence", type=int, default=None)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("template", help="introduce variables for noun phrases")
    add_text_source(p)
    p.add_argument(
        "--bind",
        action="append",
        default=[],
        required=True,
        metavar="LETTER=PHRASE",
    )
    p.add_argument("--math-delimiters", action="store_true")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--db", default=_env("DB"))
    p.add_argument("--session", default=_env("SESSION"))
    p.add_argument("--corpus", default=_env("CORPUS"))
    p.add_argument("--mock", action="store_true", default=bool(_env("MOCK")))
    p.add_argument("--ui-dir", default=None, help="built UI bundle to serve at /")
    p.add_argument("--max-upload-bytes", type=int, default=2 * 1024 * 1024)
    p.set_defaults(func=cmd_serve)

    return parser


_USAGE_ERRORS = (
    CliError,
    homoglyphs.HomoglyphError,
    perturb.PerturbError,
    probe.UnprintableError,
    llm.ConfigError,
    session.SequenceError,
    session.IntegrityError,
    questions.VariableNotFound,
    questions.AmbiguousVariable,
    questions.PhraseNotFound,
    ValueError,
)

_EMPTY_ERRORS = (
    EmptyResult,
    session.NoFooledAttempts,
    session.EmptySampleError,
    questions.EmptyCorpusError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _EMPTY_ERRORS as exc:
        _say(str(exc))
        return EXIT_EMPTY
    except _USAGE_ERRORS as exc:
        _say(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

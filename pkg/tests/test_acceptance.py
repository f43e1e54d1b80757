"""Acceptance gate: one criterion per test.

The conftest terminal-summary hook turns each test_criterion_<n> result
into one "ACCEPTANCE <n>: PASS|FAIL" line at the end of the run.
"""

import json
import math
import os
import random
import subprocess
import sys
import time
from importlib import resources
from pathlib import Path

import httpx
from fastapi.testclient import TestClient

from glyphkit.homoglyphs import (
    DatabaseSyntaxError,
    DecodeError,
    EmptyDatabaseError,
    load_database,
    parse_homoglyph_file,
)
from glyphkit.llm import make_mock_provider, send_prompt
from glyphkit.perturb import (
    Role,
    apply_plan,
    build_plan,
    count_perturbed_chars,
    suggest_targets,
)
from glyphkit.probe import make_probe_prompt, now_iso
from glyphkit.questions import inject_coefficient, load_corpus, variable_template
from glyphkit.service import ServiceConfig, create_app
from glyphkit.session import (
    Attempt,
    AttemptVerdict,
    SessionStore,
    load_reference_stats,
    summarize,
)

DATA = Path(__file__).parent / "data"


def bundled(name):
    with resources.as_file(resources.files("glyphkit.data") / name) as p:
        return Path(p)


def test_criterion_1_skeleton_round_trip(sample_db):
    rng = random.Random(20260814)
    members = sorted(cp for g in sample_db.groups for cp in g.members)
    filler = list("abc XYZ.,?!^{}$/+-=")
    alphabet = filler + [chr(cp) for cp in members]

    started = time.perf_counter()
    for _ in range(10_000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 60)))
        editable = [
            i
            for i, ch in enumerate(text)
            if sample_db.group_of(ord(ch)) is not None
        ]
        picks = rng.sample(editable, min(len(editable), rng.randint(0, 4)))
        replacements = []
        for pos in picks:
            group = sample_db.group_of(ord(text[pos]))
            replacements.append((pos, rng.choice(group.alternatives(ord(text[pos])))))

        plan = build_plan(sample_db, text, replacements)
        perturbed = apply_plan(sample_db, text, plan)
        assert sample_db.skeleton(perturbed) == sample_db.skeleton(text)
        assert count_perturbed_chars(text, perturbed) == len(plan.edits)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"10k round trips took {elapsed:.2f}s"


def test_criterion_2_parser_goldens(sample_db_bytes, confusables_bytes):
    db = parse_homoglyph_file(sample_db_bytes, "group_lines")
    assert (len(db), db.merged_group_count, db.skipped_rows) == (21, 0, 0)

    conf = parse_homoglyph_file(confusables_bytes, "confusables")
    assert (len(conf), conf.merged_group_count, conf.skipped_rows) == (4, 2, 2)

    expected_lines = {
        "bad_hex_line3.txt": 3,
        "short_group_line2.txt": 2,
        "bad_confusables_line4.txt": 4,
    }
    for name, line in expected_lines.items():
        try:
            load_database(DATA / name)
        except DatabaseSyntaxError as exc:
            assert exc.line_number == line, name
        else:
            raise AssertionError(f"{name} parsed cleanly")

    try:
        load_database(DATA / "comments_only.txt")
    except EmptyDatabaseError:
        pass
    else:
        raise AssertionError("comment-only file produced a database")

    try:
        load_database(DATA / "not_utf8.bin")
    except DecodeError:
        pass
    else:
        raise AssertionError("non-UTF-8 bytes decoded")


def test_criterion_3_target_roles():
    corpus = {q.id: q for q in load_corpus(bundled("sample_corpus.jsonl"))}

    grammar = suggest_targets(corpus["q-grammar-0n12n"].text)
    roles = {grammar_target.codepoint: grammar_target.role for grammar_target in grammar}
    assert roles[ord("0")] is Role.SYMBOLIC
    assert roles[ord("1")] is Role.SYMBOLIC
    assert roles[ord("2")] is Role.ARITHMETIC

    jug = suggest_targets(corpus["q-jug-pouring"].text)
    assert jug, "jug question has digits"
    assert all(t.role is Role.ARITHMETIC for t in jug)
    assert {chr(t.codepoint) for t in jug} == {"8", "5", "3", "4"}

    series = suggest_targets(corpus["q-geometric-sum"].text)
    assert series, "series question has digits"
    assert all(t.role is Role.ARITHMETIC for t in series)


def oracle_stats(values):
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return min(values), max(values), mean, math.sqrt(var)


def close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def test_criterion_4_statistics_oracle(tmp_path, sample_db):
    rng = random.Random(4)
    for _ in range(1_000):
        scale = 10.0 ** rng.randint(-3, 6)
        values = [rng.uniform(-scale, scale) for _ in range(rng.randint(1, 200))]
        got = summarize(values)
        lo, hi, mean, std = oracle_stats(values)
        assert close(got.min, lo) and close(got.max, hi)
        assert close(got.mean, mean) and close(got.std, std)

    # hand-computed: attempts {1, 3} -> mean 2, population std 1
    hand = summarize([1, 3])
    assert (hand.n, hand.min, hand.max, hand.mean, hand.std) == (2, 1, 3, 2.0, 1.0)

    # the same pair produced by a real session log
    store = SessionStore(str(tmp_path / "session.jsonl"))
    schedule = [("q-one", 1, True), ("q-two", 1, False), ("q-two", 2, False),
                ("q-two", 3, True)]
    for qid, number, fooled in schedule:
        text = "a 7"
        plan = build_plan(sample_db, text, [(2, 0x1D7D5)])
        store.record_attempt(
            Attempt(
                question_id=qid,
                model="m",
                attempt_number=number,
                source_text=text,
                perturbed_text="a \U0001D7D5",
                plan=plan,
                perturbed_char_count=1,
                verdict=AttemptVerdict.FOOLED if fooled else AttemptVerdict.NOT_FOOLED,
                timestamp=now_iso(),
            )
        )
    fixture = store.attempts_to_fool("m")
    assert (fixture.n, fixture.mean, fixture.std) == (2, 2.0, 1.0)

    # reference records load untouched and render through the CLI
    ref = load_reference_stats()
    qc = ref["question_chars"]
    assert (qc.n, qc.min, qc.max, qc.mean, qc.std) == (164, 32, 939, 173.45, 134.93)
    atf, pc = ref["attempts_to_fool"], ref["perturbed_chars"]
    assert (atf["chatgpt"].min, atf["chatgpt"].max, atf["chatgpt"].mean,
            atf["chatgpt"].std) == (1, 5, 1.54, 1.03)
    assert (atf["gemini"].min, atf["gemini"].max, atf["gemini"].mean,
            atf["gemini"].std) == (1, 12, 1.67, 1.66)
    assert (pc["chatgpt"].min, pc["chatgpt"].max, pc["chatgpt"].mean,
            pc["chatgpt"].std) == (0, 10, 3.09, 2.29)
    assert (pc["gemini"].min, pc["gemini"].max, pc["gemini"].mean,
            pc["gemini"].std) == (0, 10, 3.01, 2.44)

    env = {k: v for k, v in os.environ.items() if not k.startswith("GLYPHKIT_")}
    proc = subprocess.run(
        [sys.executable, "-m", "glyphkit", "stats", "--reference",
         "--format", "structured"],
        capture_output=True,
        env=env,
    )
    assert proc.returncode == 0
    rendered = proc.stdout.decode()
    for token in ("173.45", "134.93", "1.54", "1.66", "3.09", "2.44"):
        assert token in rendered


def test_criterion_5_byte_fidelity():
    prompt = "What is \U0001D7D5? Compare \U0001D7DF and хy ７."
    scalars = [ord(c) for c in prompt]

    captured = []

    def capture(request: httpx.Request) -> httpx.Response:
        captured.append(request.read())
        return httpx.Response(
            200, json={"choices": [{"message": {"content": prompt}}]}
        )

    exchange = send_prompt(
        make_mock_provider(echo=True), prompt
    )
    assert [ord(c) for c in exchange.response_text] == scalars

    from glyphkit.llm import ProviderConfig

    config = ProviderConfig(
        name="cap",
        endpoint="https://example.invalid/v1/chat/completions",
        credential_env="GLYPHKIT_ACCEPT_KEY",
        model_id="m",
    )
    os.environ["GLYPHKIT_ACCEPT_KEY"] = "k"
    try:
        wire = send_prompt(config, prompt, transport=httpx.MockTransport(capture))
    finally:
        del os.environ["GLYPHKIT_ACCEPT_KEY"]
    assert prompt.encode("utf-8") in captured[0]
    assert [ord(c) for c in wire.response_text] == scalars

    client = TestClient(create_app(ServiceConfig(mock=True)))
    with resources.as_file(
        resources.files("glyphkit.data") / "sample_homoglyphs.txt"
    ) as p:
        client.post("/api/db", content=p.read_bytes())

    from glyphkit.perturb import text_hash

    echo = client.post(
        "/api/perturb",
        json={"text": prompt, "plan": {"source_hash": text_hash(prompt), "edits": []}},
    ).json()
    assert [ord(c) for c in echo["text"]] == scalars

    served = client.get("/api/probe-prompt/1D7D5")
    assert served.content == "What is \U0001D7D5?".encode("utf-8")

    relayed = client.post("/api/llm", json={"provider": "mock", "prompt": prompt})
    assert [ord(c) for c in relayed.json()["response_text"]] == scalars

    assert make_probe_prompt(0x38) == "What is 8?"
    assert client.get("/api/probe-prompt/0038").content == b"What is 8?"


def test_criterion_6_rewrite_examples():
    source = (
        "Prove or disprove that the product of a nonzero rational number and "
        "an irrational number is irrational."
    )
    bindings = [("x", "nonzero rational number"), ("y", "irrational number")]

    plain = variable_template(source, bindings)
    assert plain == (
        "Let x and y be nonzero rational and irrational numbers respectively. "
        "Prove or disprove that the product of x and y is irrational."
    )

    math_mode = variable_template(source, bindings, math_delimiters=True)
    assert math_mode == (
        "Let $x$ and $y$ be nonzero rational and irrational numbers "
        "respectively. Prove or disprove that the product of $x$ and $y$ "
        "is irrational."
    )

    injected = inject_coefficient(math_mode, "x", "7")
    assert injected.endswith("the product of $7x$ and $y$ is irrational.")
    assert math_mode.startswith("Let $x$ and $y$")  # binding clause untouched
    assert injected.startswith("Let $x$ and $y$ be nonzero rational")


def test_criterion_7_cli_contract(tmp_path, sample_db):
    env = {k: v for k, v in os.environ.items() if not k.startswith("GLYPHKIT_")}

    def cli(*args, stdin=None):
        return subprocess.run(
            [sys.executable, "-m", "glyphkit", *args],
            capture_output=True,
            input=stdin,
            env=env,
        )

    db_path = str(bundled("sample_homoglyphs.txt"))
    corpus_path = str(bundled("sample_corpus.jsonl"))

    # rewrite pipeline over the bundled corpus, raw stdout at each step
    templated = cli(
        "template", "--question", "q-rational-product", "--corpus", corpus_path,
        "--bind", "x=nonzero rational number", "--bind", "y=irrational number",
        "--math-delimiters",
    )
    assert templated.returncode == 0
    text = templated.stdout.decode("utf-8")

    injected = cli("inject", "--text", text, "--variable", "x", "--coefficient", "7")
    assert injected.returncode == 0
    staged = injected.stdout.decode("utf-8")
    assert "$7x$" in staged

    # structured stdout purity: every line is one JSON record
    suggested = cli(
        "suggest", "--question", "q-grammar-0n12n", "--corpus", corpus_path,
        "--format", "structured",
    )
    assert suggested.returncode == 0
    for line in suggested.stdout.decode().splitlines():
        json.loads(line)

    # perturb the injected coefficient; stdout is the raw perturbed bytes
    position = staged.index("7")
    plan = build_plan(sample_db, staged, [(position, 0x1D7D5)])
    plan_file = tmp_path / "plan.json"
    from glyphkit.perturb import save_plan

    save_plan(plan, plan_file)
    perturbed = cli(
        "perturb", "--db", db_path, "--plan", str(plan_file),
        stdin=staged.encode("utf-8"),
    )
    assert perturbed.returncode == 0
    expected = staged[:position] + "\U0001D7D5" + staged[position + 1 :]
    assert perturbed.stdout == expected.encode("utf-8")

    # probe the replacement glyph with the mock provider, logging to a session
    session_file = tmp_path / "session.jsonl"
    probed = cli(
        "probe", "--codepoint", "1D7D5", "--mock", "--auto", "--db", db_path,
        "--session", str(session_file), "--format", "structured",
    )
    assert probed.returncode == 0

    # seed attempts, then stats: exit 0 with TSV on stdout only
    store = SessionStore(str(session_file))
    for number, verdict in ((1, AttemptVerdict.NOT_FOOLED),
                            (2, AttemptVerdict.FOOLED)):
        store.record_attempt(
            Attempt(
                question_id="q-rational-product",
                model="mock",
                attempt_number=number,
                source_text=staged,
                perturbed_text=expected,
                plan=plan,
                perturbed_char_count=1,
                verdict=verdict,
                timestamp=now_iso(),
            )
        )
    stats = cli(
        "stats", "--session", str(session_file), "--model", "mock",
        "--format", "structured",
    )
    assert stats.returncode == 0
    lines = stats.stdout.decode().splitlines()
    assert lines[0].startswith("table\tmodel")
    assert all("\t" in line for line in lines[1:])

    # exit 1: empty result (no fooled attempts for this model)
    empty = cli("stats", "--session", str(session_file), "--model", "other")
    assert empty.returncode == 1

    # exit 2: usage error (no such corpus question)
    usage = cli("suggest", "--question", "missing", "--corpus", corpus_path)
    assert usage.returncode == 2
    assert usage.stdout == b""

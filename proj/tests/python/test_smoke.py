# Copyright 2026 The textfuse Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the Python bindings."""

import json
import math
import os
import pathlib

import pytest

import textfuse

DATA = pathlib.Path(os.environ.get("TEXTFUSE_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))


def corpus(name):
    return (DATA / "corpora" / name).read_text(encoding="utf-8").splitlines()


@pytest.fixture(scope="module")
def word():
    return textfuse.load_tokenizer(DATA / "tokenizers" / "word.json")


@pytest.fixture(scope="module")
def sp():
    return textfuse.load_tokenizer(DATA / "tokenizers" / "sp.json")


def test_tokenizer_roundtrip(word, sp):
    assert word.category == "WORD_IDS"
    assert sp.category == "OPAQUE"
    for tok in (word, sp):
        ids = tok.encode("LLMs are not the only ones")
        assert tok.decode(ids) == "LLMs are not the only ones"
    assert 0.0 < textfuse.vocab_overlap(word, sp) < 1.0


def test_perplexity():
    assert textfuse.perplexity([math.log(2.0)]) == pytest.approx(2.0)
    assert textfuse.average_perplexity([16.6, 15.3]) == pytest.approx(15.95)


def test_fuse_two_ngram_models(word, sp):
    a = textfuse.ngram_backend("facts-a", word, corpus("facts_a.txt"))
    b = textfuse.ngram_backend("facts-b", sp, corpus("facts_b.txt"))
    config = textfuse.FusionConfig()
    config.max_iterations = 6
    config.stop_strings = [" ."]
    single_a, _ = textfuse.greedy_decode("facts : zin", a, config)
    single_b, _ = textfuse.greedy_decode("facts : zin", b, config)
    assert single_b == " cyan"
    assert single_a != single_b
    result = textfuse.fuse("facts : zin", [a, b], config)
    assert result.chosen_text == " cyan"
    assert result.chosen_source == "JOINT"
    events = textfuse.trace_events(result)
    assert len(events) == result.iterations
    assert list(events[0]) == ["iteration", "candidates", "winner_model", "winner_text"]

    config.mode = textfuse.FusionMode.COOL_PLUS_R
    plus = textfuse.fuse("facts : zin", [a, b], config)
    assert [source for source, _ in plus.individual_texts] == ["facts-a", "facts-b"]


def test_golden_config():
    config = textfuse.load_config(DATA / "configs" / "golden.toml")
    backends = textfuse.build_backends(config)
    assert [b.model_id for b in backends] == ["lead", "second"]
    result = textfuse.fuse("LLMs are", backends, config.fusion)
    assert result.joint_text == " not the only ones that can be used for this purpose"
    assert result.stop_reason == "eos"
    winners = [e["winner_model"] for e in textfuse.trace_events(result)]
    assert winners == ["lead"] * 4 + ["second"] + ["lead"] * 6


def test_eval_report(tmp_path):
    config = textfuse.load_config(DATA / "configs" / "arith.toml")
    config.output_dir = tmp_path
    report = json.loads(textfuse.run_eval(config, textfuse.build_backends(config)))
    assert [cell["mode"] for cell in report["cells"]] == config.modes
    assert (tmp_path / "report.json").exists()


def test_errors_carry_codes(word):
    config = textfuse.FusionConfig()
    config.max_iterations = 0
    with pytest.raises(textfuse.TextfuseError) as info:
        config.validate()
    assert info.value.code == "ConfigError"
    with pytest.raises(textfuse.TextfuseError) as info:
        word.encode("\t")
    assert info.value.code == "EncodingFailure"
    assert textfuse.extract_answer("the answer is 42.", r"(\d+)") == "42"


def test_remote_protocol_roundtrip(word):
    local = textfuse.ngram_backend("facts-a", word, corpus("facts_a.txt"))
    server = textfuse.ProtocolServer(local)
    port = server.bind("127.0.0.1", 0)
    server.start()
    try:
        remote = textfuse.remote_backend("facts-a", word, f"http://127.0.0.1:{port}")
        config = textfuse.FusionConfig()
        config.max_iterations = 5
        assert textfuse.fuse("facts : nen", [remote], config).joint_text == \
            textfuse.fuse("facts : nen", [local], config).joint_text
        assert server.session_count == 0
    finally:
        server.stop()
    dead = textfuse.remote_backend("gone", word, f"http://127.0.0.1:{port}", retries=0, timeout_ms=300)
    with pytest.raises(textfuse.TextfuseError) as info:
        textfuse.greedy_decode("x", dead)
    assert info.value.code == "BackendUnavailable"

#!/usr/bin/env python3
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
"""Regenerates the toy tokenizers, corpora and scripts under data/."""

import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent
SPACE_MARK = "▁"

CHARS = (
    [chr(c) for c in range(ord("a"), ord("z") + 1)]
    + [chr(c) for c in range(ord("A"), ord("Z") + 1)]
    + [chr(c) for c in range(ord("0"), ord("9") + 1)]
    + list(".,:;!?'\"-()+=*/#<>_[]{}|&%$@^~`\\")
    + ["é", "中", "文"]
)

WORDS = """
LLMs are not the only ones who that can be used for this purpose trained
inherently have been affected by pandemic on vast datasets include a wide
variety of human hello world is and to in it facts colors answer what
color sum
""".split()

COLORS = ["red", "blue", "green", "pink", "gray", "gold", "teal", "cyan"]


def make_entities(count, seed):
    rng = random.Random(seed)
    onsets = ["b", "bl", "d", "dr", "f", "g", "gl", "k", "kr", "m", "n", "p", "pl", "s", "sn", "t", "v", "z"]
    vowels = ["a", "e", "i", "o", "u"]
    codas = ["b", "ck", "d", "g", "k", "m", "n", "p", "rp", "sh", "x"]
    taken = set(WORDS) | set(COLORS)
    out = []
    while len(out) < count:
        word = rng.choice(onsets) + rng.choice(vowels) + rng.choice(codas)
        if word not in taken:
            taken.add(word)
            out.append(word)
    return out


ENTITIES = make_entities(40, seed=7)
VOCAB_WORDS = WORDS + COLORS + ENTITIES


def dedupe(items):
    seen = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def word_tokenizer():
    vocab = CHARS + [" ", "\n", "  "]
    for w in VOCAB_WORDS:
        vocab += [w, " " + w]
    vocab += [" :", " .", " =", " +", "Multi", "-task", "ing"]
    return {"name": "word", "category": "WORD_IDS", "kind": "word", "vocab": dedupe(vocab), "eos": "<|eos|>"}


def bpe_tokenizer():
    vocab = CHARS + [" ", "\n"]
    merges = []
    for w in VOCAB_WORDS + ["Multi", "tasking"]:
        for body in (w, " " + w):
            for i in range(1, len(body)):
                merges.append((body[:i], body[i]))
                vocab.append(body[: i + 1])
    for p in ":.=+":
        merges.append((" ", p))
        vocab.append(" " + p)
    merges = dedupe(merges)
    return {
        "name": "bpe",
        "category": "CHAR_OFFSETS",
        "kind": "bpe",
        "vocab": dedupe(vocab),
        "merges": [list(m) for m in merges],
        "eos": "<|endoftext|>",
    }


def sentencepiece_tokenizer():
    vocab = CHARS + [SPACE_MARK, "\n", "▁no"]
    for w in VOCAB_WORDS:
        if w == "not":
            continue  # " not" encodes as "▁no" + "t"
        vocab += [w, SPACE_MARK + w]
    vocab += [SPACE_MARK + p for p in ":.=+"]
    return {"name": "sp", "category": "OPAQUE", "kind": "sentencepiece", "vocab": dedupe(vocab), "eos": "</s>"}


def byte_tokenizer():
    return {"name": "byte", "category": "OPAQUE", "kind": "byte", "vocab": []}


def fact_lines(entities, seed, epochs=12, per_line=4):
    rng = random.Random(seed)
    answer = {e: COLORS[i % len(COLORS)] for i, e in enumerate(ENTITIES)}
    lines = []
    for _ in range(epochs):
        order = list(entities)
        rng.shuffle(order)
        for i in range(0, len(order), per_line):
            chunk = order[i : i + per_line]
            lines.append("facts : " + " ".join(f"{e} {answer[e]} ." for e in chunk))
    return lines, answer


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def golden_scripts():
    ln = math.log
    lead = {
        "rules": {
            "are": " not", "not": " the", "the": " only", "only": " ones", "ones": " who",
            "who": " have", "that": " can", "can": " be", "be": " used", "used": " for",
            "for": " this", "this": " purpose",
        },
        "nll": {
            "are| not": ln(16.6),
            "are| trained": ln(290.4),
            "not| inherently": 4.0,
            "ones| that": 0.5,
        },
        "default_nll": 1.0,
        "eos_nll": 0.1,
    }
    second = {
        "rules": {
            "are": " trained", "not": " inherently", "the": " only", "only": " ones", "ones": " that",
            "who": " can", "that": " can", "can": " be", "be": " used", "used": " for",
            "for": " this", "this": " purpose",
        },
        "nll": {
            "are| no": ln(15.3),
            "no|t": ln(15.3),
            "are| trained": ln(14.0),
            "ones| who": 3.0,
        },
        "default_nll": 1.0,
        "eos_nll": 0.1,
    }
    return lead, second


def arith_scripts():
    # "sum : 2 + 3 =" continues with the answer; the two scripts disagree on half of the sums.
    lead = {"rules": {"=": " 5 ."}, "nll": {"=| 5": 0.2}, "default_nll": 2.0}
    second = {"rules": {"=": " 6 ."}, "nll": {"=| 6": 1.5, "=| 5": 0.4}, "default_nll": 2.0}
    return lead, second


def main():
    write_json(ROOT / "tokenizers" / "word.json", word_tokenizer())
    write_json(ROOT / "tokenizers" / "bpe.json", bpe_tokenizer())
    write_json(ROOT / "tokenizers" / "sp.json", sentencepiece_tokenizer())
    write_json(ROOT / "tokenizers" / "byte.json", byte_tokenizer())

    half = len(ENTITIES) // 2
    lines_a, answer = fact_lines(ENTITIES[:half], seed=11)
    lines_b, _ = fact_lines(ENTITIES[half:], seed=13)
    corpora = ROOT / "corpora"
    corpora.mkdir(parents=True, exist_ok=True)
    (corpora / "facts_a.txt").write_text("\n".join(lines_a) + "\n", encoding="utf-8")
    (corpora / "facts_b.txt").write_text("\n".join(lines_b) + "\n", encoding="utf-8")
    with (corpora / "color_items.jsonl").open("w", encoding="utf-8") as out:
        for e in ENTITIES:
            out.write(json.dumps({"input": e, "answer": answer[e]}) + "\n")

    lead, second = golden_scripts()
    write_json(ROOT / "scripts" / "golden_lead.json", lead)
    write_json(ROOT / "scripts" / "golden_second.json", second)
    lead, second = arith_scripts()
    write_json(ROOT / "scripts" / "arith_lead.json", lead)
    write_json(ROOT / "scripts" / "arith_second.json", second)


if __name__ == "__main__":
    main()

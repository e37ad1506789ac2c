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

"""Training-free fusion of language models with different tokenizers."""

import json

from ._core import (
    Backend,
    FusionConfig,
    FusionMode,
    FusionResult,
    HarnessConfig,
    ProtocolServer,
    SegmentMode,
    TextfuseError,
    Tokenizer,
    average_perplexity,
    build_backends,
    extract_answer,
    fuse,
    greedy_decode,
    load_config,
    load_tokenizer,
    ngram_backend,
    perplexity,
    remote_backend,
    run_eval,
    scripted_backend,
    vocab_overlap,
)

__version__ = "0.1.0"


def trace_events(result):
    """Fusion trace of a result as a list of dicts, one per iteration."""
    return [json.loads(line) for line in result.trace_jsonl().splitlines()]


__all__ = [
    "Backend",
    "FusionConfig",
    "FusionMode",
    "FusionResult",
    "HarnessConfig",
    "ProtocolServer",
    "SegmentMode",
    "TextfuseError",
    "Tokenizer",
    "average_perplexity",
    "build_backends",
    "extract_answer",
    "fuse",
    "greedy_decode",
    "load_config",
    "load_tokenizer",
    "ngram_backend",
    "perplexity",
    "remote_backend",
    "run_eval",
    "scripted_backend",
    "trace_events",
    "vocab_overlap",
]

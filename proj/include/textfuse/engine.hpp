// Copyright 2026 The textfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "textfuse/backend.hpp"
#include "textfuse/scoring.hpp"
#include "textfuse/segmenter.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace textfuse {

enum class FusionMode { Cool, Rerank, CoolPlusRerank };

std::string_view fusion_mode_name(FusionMode mode);
// Accepts "cool", "rerank" and "cool+r" (case-insensitive).
FusionMode fusion_mode_from_name(std::string_view name);

struct FusionConfig {
    SegmentMode segment_mode = SegmentMode::Aligned;
    FusionMode mode = FusionMode::Cool;
    std::size_t max_iterations = 64;
    std::size_t max_new_chars = 512; // code points
    std::vector<std::string> stop_strings;
    std::size_t segment_token_cap = 32;
    std::size_t codec_window_k = 4;
    bool parallel = false; // one task per backend for generation and scoring

    // Throws Error(ConfigError) naming the offending field.
    void validate() const;
};

enum class StopReason { None, Eos, StopString, MaxNewChars, MaxIterations };

std::string_view stop_reason_name(StopReason reason);

struct CandidateRecord {
    std::string model_id; // origin
    std::string text;
    SegmentScore score;
    bool eos = false;
    bool token_budget_hit = false;
};

struct TraceEvent {
    std::size_t iteration = 0;
    std::vector<CandidateRecord> candidates;
    std::size_t winner = 0; // index into candidates
    std::string winner_model;
    std::string winner_text;
};

struct RerankEntry {
    std::string source; // "JOINT" or a model id
    std::string text;
    SegmentScore score;
};

struct FusionResult {
    std::string joint_text;
    std::vector<std::pair<std::string, std::string>> individual_texts; // model id, continuation
    std::string chosen_text;
    std::string chosen_source;
    std::vector<TraceEvent> trace;
    std::vector<RerankEntry> rerank; // in candidate order, RERANK and COOL_PLUS_R only
    StopReason stop_reason = StopReason::None;
};

inline constexpr std::string_view kJointSource = "JOINT";

FusionResult fuse(std::string_view prompt, std::span<const BackendPtr> backends, const FusionConfig &config);

struct GreedyResult {
    std::string text;
    StopReason stop_reason = StopReason::None;
    std::size_t tokens = 0;
};

// Plain greedy decoding of one backend under the same stop conditions. The
// iteration limit becomes a token limit of max_iterations * segment_token_cap.
GreedyResult greedy_decode(std::string_view prompt, const Backend &backend, const FusionConfig &config);

struct RerankOutcome {
    std::size_t winner = 0;
    std::vector<RerankEntry> entries;
};

// Scores each (source, text) continuation with every backend against the
// prompt and picks the smallest average perplexity; earlier entries win ties.
// Empty texts are disqualified.
RerankOutcome rerank_continuations(std::string_view prompt,
                                   std::span<const std::pair<std::string, std::string>> continuations,
                                   std::span<const BackendPtr> backends,
                                   bool parallel = false);

// One JSON object per trace event.
void write_trace_jsonl(std::ostream &out, const FusionResult &result);
std::string trace_event_json(const TraceEvent &event);

} // namespace textfuse

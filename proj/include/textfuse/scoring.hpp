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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace textfuse {

// exp of the mean per-token negative log-likelihood (natural log).
// Throws Error(EmptySegment) for an empty list.
double perplexity(std::span<const double> nll_per_token);
double perplexity(double nll_sum, std::size_t token_count);

// Arithmetic mean of per-model perplexities.
double average_perplexity(std::span<const double> per_model_ppl);

// As above, but a missing entry (a model that could not score the segment)
// throws Error(DisqualifiedSegment).
double average_perplexity(std::span<const std::optional<double>> per_model_ppl);

struct ModelScore {
    std::string model_id;
    double nll_sum = 0.0;
    std::size_t token_count = 0;
    double ppl = 0.0;
};

struct SegmentScore {
    // One entry per model in backend order; nullopt marks a model that could not score.
    std::vector<std::optional<ModelScore>> per_model;
    std::optional<double> avg_ppl;

    bool qualified() const noexcept { return avg_ppl.has_value(); }
};

struct ModelNll {
    std::string model_id;
    std::optional<std::pair<double, std::size_t>> nll_sum_and_count;
};

// Builds per-model perplexities and their average; unqualified if any model is missing.
SegmentScore make_segment_score(std::span<const ModelNll> per_model);

struct RankedCandidate {
    std::optional<double> avg_ppl; // nullopt: disqualified
    std::size_t origin_index = 0;  // tie-break key
};

// Index of the qualified candidate with the smallest average perplexity; exact
// ties go to the lowest origin index. Throws Error(NoQualifiedCandidate).
std::size_t select_winner(std::span<const RankedCandidate> candidates);

} // namespace textfuse

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

#include "textfuse/scoring.hpp"

#include "textfuse/error.hpp"

#include <cmath>
#include <numeric>

namespace textfuse {

double perplexity(std::span<const double> nll_per_token) {
    if (nll_per_token.empty()) {
        throw Error(ErrorCode::EmptySegment, "perplexity of an empty token sequence");
    }
    const double sum = std::accumulate(nll_per_token.begin(), nll_per_token.end(), 0.0);
    return perplexity(sum, nll_per_token.size());
}

double perplexity(double nll_sum, std::size_t token_count) {
    if (token_count == 0) {
        throw Error(ErrorCode::EmptySegment, "perplexity of an empty token sequence");
    }
    return std::exp(nll_sum / static_cast<double>(token_count));
}

double average_perplexity(std::span<const double> per_model_ppl) {
    if (per_model_ppl.empty()) {
        throw Error(ErrorCode::InvalidArgument, "average perplexity needs at least one model");
    }
    const double sum = std::accumulate(per_model_ppl.begin(), per_model_ppl.end(), 0.0);
    return sum / static_cast<double>(per_model_ppl.size());
}

double average_perplexity(std::span<const std::optional<double>> per_model_ppl) {
    std::vector<double> values;
    values.reserve(per_model_ppl.size());
    for (const auto &v : per_model_ppl) {
        if (!v) {
            throw Error(ErrorCode::DisqualifiedSegment, "a model could not score the segment");
        }
        values.push_back(*v);
    }
    return average_perplexity(values);
}

SegmentScore make_segment_score(std::span<const ModelNll> per_model) {
    SegmentScore score;
    std::vector<std::optional<double>> ppls;
    for (const auto &m : per_model) {
        if (!m.nll_sum_and_count) {
            score.per_model.emplace_back();
            ppls.emplace_back();
            continue;
        }
        const auto [sum, count] = *m.nll_sum_and_count;
        ModelScore ms{m.model_id, sum, count, perplexity(sum, count)};
        ppls.emplace_back(ms.ppl);
        score.per_model.emplace_back(std::move(ms));
    }
    try {
        score.avg_ppl = average_perplexity(ppls);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::DisqualifiedSegment) {
            throw;
        }
    }
    return score;
}

std::size_t select_winner(std::span<const RankedCandidate> candidates) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto &c = candidates[i];
        if (!c.avg_ppl) {
            continue;
        }
        if (!best) {
            best = i;
            continue;
        }
        const auto &b = candidates[*best];
        if (*c.avg_ppl < *b.avg_ppl || (*c.avg_ppl == *b.avg_ppl && c.origin_index < b.origin_index)) {
            best = i;
        }
    }
    if (!best) {
        throw Error(ErrorCode::NoQualifiedCandidate, "every candidate segment was disqualified");
    }
    return *best;
}

} // namespace textfuse

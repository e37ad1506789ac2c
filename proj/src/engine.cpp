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

#include "textfuse/engine.hpp"

#include "textfuse/error.hpp"
#include "textfuse/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <exception>
#include <future>
#include <map>
#include <ostream>

namespace textfuse {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Runs fn(0..n-1), concurrently when asked. All tasks are joined before the
// first failure (in index order) is rethrown.
template <class F>
void for_each_index(std::size_t n, bool parallel, F &&fn) {
    if (!parallel || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::future<void>> tasks;
    tasks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        tasks.push_back(std::async(std::launch::async, [&fn, i] { fn(i); }));
    }
    std::exception_ptr first;
    for (auto &task : tasks) {
        try {
            task.get();
        } catch (...) {
            if (!first) {
                first = std::current_exception();
            }
        }
    }
    if (first) {
        std::rethrow_exception(first);
    }
}

// Applies stop-string and length truncation to generated text and reports the
// first reason that holds, in evaluation order.
StopReason apply_stops(std::string &text, const FusionConfig &config, bool eos, bool out_of_iterations) {
    std::size_t cut = std::string::npos;
    for (const auto &stop : config.stop_strings) {
        if (!stop.empty()) {
            cut = std::min(cut, text.find(stop));
        }
    }
    const bool stop_hit = cut != std::string::npos;
    if (stop_hit) {
        text.resize(cut);
    }
    const bool length_hit = utf8::count_code_points(text) >= config.max_new_chars;
    if (length_hit) {
        text.resize(utf8::prefix_bytes(text, config.max_new_chars));
    }
    if (eos) {
        return StopReason::Eos;
    }
    if (stop_hit) {
        return StopReason::StopString;
    }
    if (length_hit) {
        return StopReason::MaxNewChars;
    }
    return out_of_iterations ? StopReason::MaxIterations : StopReason::None;
}

// NLL of text under one session, or nullopt when the model cannot encode it.
std::optional<std::pair<double, std::size_t>> try_score(const Session &session, const std::string &text) {
    try {
        const TextScore score = session.score_text(text);
        if (score.token_count == 0) {
            return std::nullopt;
        }
        return std::make_pair(score.nll_sum, score.token_count);
    } catch (const Error &e) {
        if (e.code() == ErrorCode::EncodingFailure || e.code() == ErrorCode::WindowMismatch) {
            return std::nullopt;
        }
        throw;
    }
}

// Scores every distinct text with every session. Result is [text][session].
std::vector<std::vector<ModelNll>> score_all(const std::vector<const Session *> &sessions,
                                             const std::vector<std::string> &texts, bool parallel) {
    std::vector<std::vector<ModelNll>> table(texts.size(), std::vector<ModelNll>(sessions.size()));
    for_each_index(sessions.size(), parallel, [&](std::size_t b) {
        for (std::size_t t = 0; t < texts.size(); ++t) {
            ModelNll &cell = table[t][b];
            cell.model_id = sessions[b]->model_id();
            if (!texts[t].empty()) {
                cell.nll_sum_and_count = try_score(*sessions[b], texts[t]);
            }
        }
    });
    return table;
}

std::vector<SessionPtr> open_sessions(std::string_view prompt, std::span<const BackendPtr> backends, bool parallel) {
    std::vector<SessionPtr> sessions(backends.size());
    for_each_index(backends.size(), parallel, [&](std::size_t i) { sessions[i] = backends[i]->open_session(prompt); });
    return sessions;
}

void require_backends(std::span<const BackendPtr> backends) {
    if (backends.empty()) {
        throw Error(ErrorCode::InvalidArgument, "fusion needs at least one backend");
    }
    for (const auto &backend : backends) {
        if (!backend) {
            throw Error(ErrorCode::InvalidArgument, "null backend");
        }
    }
}

struct CoolOutcome {
    std::string text;
    std::vector<TraceEvent> trace;
    StopReason stop_reason = StopReason::None;
};

CoolOutcome cool_loop(std::string_view prompt, std::span<const BackendPtr> backends, const FusionConfig &config) {
    const std::size_t n = backends.size();
    const SegmenterOptions options{CodecWindow(config.codec_window_k), config.segment_token_cap};
    std::vector<const Tokenizer *> tokenizers;
    for (const auto &backend : backends) {
        tokenizers.push_back(&backend->tokenizer());
    }

    std::vector<SessionPtr> sessions = open_sessions(prompt, backends, config.parallel);
    std::vector<const Session *> scorers;
    for (const auto &session : sessions) {
        scorers.push_back(session.get());
    }
    std::vector<bool> stream_done(n, false);

    CoolOutcome out;
    for (std::size_t iteration = 0;; ++iteration) {
        if (iteration == config.max_iterations) {
            out.stop_reason = StopReason::MaxIterations;
            break;
        }
        if (std::all_of(stream_done.begin(), stream_done.end(), [](bool done) { return done; })) {
            out.stop_reason = StopReason::Eos;
            break;
        }

        // 1. Each live backend proposes a segment from a fork of its session.
        std::vector<std::optional<Segment>> segments(n);
        for_each_index(n, config.parallel, [&](std::size_t i) {
            if (stream_done[i]) {
                return;
            }
            SessionPtr fork = sessions[i]->fork();
            SessionTokenSource source(*fork);
            const std::string context = sessions[i]->context_text();
            Segment segment = config.segment_mode == SegmentMode::Shortest
                                  ? shortest_segment(source, *tokenizers[i], context, options)
                                  : aligned_segment(source, *tokenizers[i], tokenizers, context, options);
            segment.origin_model = backends[i]->model_id();
            segment.origin_index = i;
            segments[i] = std::move(segment);
        });

        std::vector<std::size_t> origins;
        std::vector<std::string> distinct;
        std::vector<std::size_t> text_slot; // candidate -> index into distinct
        for (std::size_t i = 0; i < n; ++i) {
            if (!segments[i]) {
                continue;
            }
            if (segments[i]->eos) {
                stream_done[i] = true;
            }
            if (segments[i]->text.empty()) {
                continue;
            }
            origins.push_back(i);
            auto it = std::find(distinct.begin(), distinct.end(), segments[i]->text);
            text_slot.push_back(static_cast<std::size_t>(it - distinct.begin()));
            if (it == distinct.end()) {
                distinct.push_back(segments[i]->text);
            }
        }
        if (origins.empty()) {
            if (std::all_of(stream_done.begin(), stream_done.end(), [](bool done) { return done; })) {
                out.stop_reason = StopReason::Eos;
                break;
            }
            throw Error(ErrorCode::NoQualifiedCandidate,
                        "no backend produced a segment at iteration " + std::to_string(iteration));
        }

        // 2. Every backend scores every candidate in its pre-iteration context.
        const auto table = score_all(scorers, distinct, config.parallel);

        TraceEvent event;
        event.iteration = iteration;
        std::vector<RankedCandidate> ranked;
        for (std::size_t c = 0; c < origins.size(); ++c) {
            const Segment &segment = *segments[origins[c]];
            CandidateRecord record;
            record.model_id = segment.origin_model;
            record.text = segment.text;
            record.score = make_segment_score(table[text_slot[c]]);
            record.eos = segment.eos;
            record.token_budget_hit = segment.token_budget_hit;
            ranked.push_back({record.score.avg_ppl, segment.origin_index});
            event.candidates.push_back(std::move(record));
        }

        // 3. The winner extends every session.
        event.winner = select_winner(ranked);
        const CandidateRecord &winner = event.candidates[event.winner];
        event.winner_model = winner.model_id;
        event.winner_text = winner.text;
        const bool winner_eos = winner.eos;
        out.text += winner.text;
        const std::string appended = winner.text;
        out.trace.push_back(std::move(event));

        out.stop_reason = apply_stops(out.text, config, winner_eos, iteration + 1 == config.max_iterations);
        if (out.stop_reason != StopReason::None) {
            break;
        }
        for_each_index(n, config.parallel, [&](std::size_t i) { sessions[i]->append_text(appended); });
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> individual_continuations(std::string_view prompt,
                                                                          std::span<const BackendPtr> backends,
                                                                          const FusionConfig &config) {
    std::vector<std::pair<std::string, std::string>> out(backends.size());
    for_each_index(backends.size(), config.parallel, [&](std::size_t i) {
        out[i] = {backends[i]->model_id(), greedy_decode(prompt, *backends[i], config).text};
    });
    return out;
}

nlohmann::ordered_json score_json(const SegmentScore &score) {
    nlohmann::ordered_json per_model = nlohmann::ordered_json::object();
    for (const auto &entry : score.per_model) {
        if (entry) {
            per_model[entry->model_id] = entry->ppl;
        }
    }
    return per_model;
}

nlohmann::ordered_json optional_json(const std::optional<double> &value) {
    return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

} // namespace

std::string_view fusion_mode_name(FusionMode mode) {
    switch (mode) {
    case FusionMode::Cool:
        return "cool";
    case FusionMode::Rerank:
        return "rerank";
    case FusionMode::CoolPlusRerank:
        return "cool+r";
    }
    return "cool";
}

FusionMode fusion_mode_from_name(std::string_view name) {
    const std::string key = lower(name);
    if (key == "cool") {
        return FusionMode::Cool;
    }
    if (key == "rerank") {
        return FusionMode::Rerank;
    }
    if (key == "cool+r" || key == "cool_plus_r") {
        return FusionMode::CoolPlusRerank;
    }
    throw Error(ErrorCode::ConfigError, "unknown fusion mode '" + std::string(name) + "'");
}

std::string_view stop_reason_name(StopReason reason) {
    switch (reason) {
    case StopReason::None:
        return "none";
    case StopReason::Eos:
        return "eos";
    case StopReason::StopString:
        return "stop_string";
    case StopReason::MaxNewChars:
        return "max_new_chars";
    case StopReason::MaxIterations:
        return "max_iterations";
    }
    return "none";
}

void FusionConfig::validate() const {
    if (max_iterations < 1) {
        throw Error(ErrorCode::ConfigError, "max_iterations must be at least 1");
    }
    if (max_new_chars < 1) {
        throw Error(ErrorCode::ConfigError, "max_new_chars must be at least 1");
    }
    if (segment_token_cap < 1) {
        throw Error(ErrorCode::ConfigError, "segment_token_cap must be at least 1");
    }
    if (codec_window_k < 1) {
        throw Error(ErrorCode::ConfigError, "codec_window_k must be at least 1");
    }
}

GreedyResult greedy_decode(std::string_view prompt, const Backend &backend, const FusionConfig &config) {
    config.validate();
    SessionPtr session = backend.open_session(prompt);
    const std::size_t start = session->context_text().size();
    const std::size_t token_limit = config.max_iterations * config.segment_token_cap;
    GreedyResult out;
    while (out.stop_reason == StopReason::None) {
        const TokenStep step = session->next_token();
        if (!step.eos) {
            ++out.tokens;
        }
        out.text = session->context_text().substr(start);
        out.stop_reason = apply_stops(out.text, config, step.eos, out.tokens >= token_limit);
    }
    return out;
}

RerankOutcome rerank_continuations(std::string_view prompt,
                                   std::span<const std::pair<std::string, std::string>> continuations,
                                   std::span<const BackendPtr> backends,
                                   bool parallel) {
    require_backends(backends);
    if (continuations.empty()) {
        throw Error(ErrorCode::InvalidArgument, "rerank needs at least one continuation");
    }
    std::vector<SessionPtr> sessions = open_sessions(prompt, backends, parallel);
    std::vector<const Session *> scorers;
    for (const auto &session : sessions) {
        scorers.push_back(session.get());
    }
    std::vector<std::string> texts;
    for (const auto &entry : continuations) {
        texts.push_back(entry.second);
    }
    const auto table = score_all(scorers, texts, parallel);

    RerankOutcome out;
    std::vector<RankedCandidate> ranked;
    for (std::size_t c = 0; c < continuations.size(); ++c) {
        RerankEntry entry{continuations[c].first, continuations[c].second, make_segment_score(table[c])};
        ranked.push_back({entry.score.avg_ppl, c});
        out.entries.push_back(std::move(entry));
    }
    out.winner = select_winner(ranked);
    return out;
}

FusionResult fuse(std::string_view prompt, std::span<const BackendPtr> backends, const FusionConfig &config) {
    require_backends(backends);
    config.validate();

    FusionResult result;
    std::vector<std::pair<std::string, std::string>> candidates;
    if (config.mode != FusionMode::Rerank) {
        CoolOutcome cool = cool_loop(prompt, backends, config);
        result.joint_text = std::move(cool.text);
        result.trace = std::move(cool.trace);
        result.stop_reason = cool.stop_reason;
        if (config.mode == FusionMode::Cool) {
            result.chosen_text = result.joint_text;
            result.chosen_source = std::string(kJointSource);
            return result;
        }
        candidates.emplace_back(std::string(kJointSource), result.joint_text);
    }

    result.individual_texts = individual_continuations(prompt, backends, config);
    candidates.insert(candidates.end(), result.individual_texts.begin(), result.individual_texts.end());

    const bool all_empty =
        std::all_of(candidates.begin(), candidates.end(), [](const auto &entry) { return entry.second.empty(); });
    if (all_empty) {
        result.chosen_source = candidates.front().first;
        for (const auto &[source, text] : candidates) {
            result.rerank.push_back({source, text, {}});
        }
        return result;
    }
    RerankOutcome outcome = rerank_continuations(prompt, candidates, backends, config.parallel);
    result.chosen_source = outcome.entries[outcome.winner].source;
    result.chosen_text = outcome.entries[outcome.winner].text;
    result.rerank = std::move(outcome.entries);
    return result;
}

std::string trace_event_json(const TraceEvent &event) {
    nlohmann::ordered_json line;
    line["iteration"] = event.iteration;
    nlohmann::ordered_json candidates = nlohmann::ordered_json::array();
    for (const auto &candidate : event.candidates) {
        nlohmann::ordered_json item;
        item["model_id"] = candidate.model_id;
        item["text"] = candidate.text;
        item["per_model_ppl"] = score_json(candidate.score);
        item["avg_ppl"] = optional_json(candidate.score.avg_ppl);
        item["eos"] = candidate.eos;
        candidates.push_back(std::move(item));
    }
    line["candidates"] = std::move(candidates);
    line["winner_model"] = event.winner_model;
    line["winner_text"] = event.winner_text;
    return line.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

void write_trace_jsonl(std::ostream &out, const FusionResult &result) {
    for (const auto &event : result.trace) {
        out << trace_event_json(event) << '\n';
    }
}

} // namespace textfuse

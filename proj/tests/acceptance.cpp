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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include "support.hpp"

#include "textfuse/engine.hpp"
#include "textfuse/error.hpp"
#include "textfuse/harness.hpp"
#include "textfuse/ngram.hpp"
#include "textfuse/scoring.hpp"
#include "textfuse/segmenter.hpp"
#include "textfuse/tokenizer.hpp"
#include "textfuse/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace {

using namespace textfuse;
using textfuse::testing::data_path;
using textfuse::testing::TextGenerator;
using textfuse::testing::toys;

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> failures; // first few counterexamples
    std::size_t failure_count = 0;

    void fail(const std::string &what) {
        pass = false;
        ++failure_count;
        if (failures.size() < 3) {
            failures.push_back(what);
        }
    }
    void require(bool ok, const std::string &what) {
        if (!ok) {
            fail(what);
        }
    }
};

std::string json_quoted(const std::string &text) { return nlohmann::json(text).dump(); }

std::vector<std::string> read_lines(const std::string &relative) {
    std::ifstream in(data_path(relative));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    return lines;
}

bool starts_with(const TokenSeq &seq, const TokenSeq &prefix) {
    return prefix.size() <= seq.size() && std::equal(prefix.begin(), prefix.end(), seq.begin());
}

std::optional<TokenSeq> try_encode(const Tokenizer &t, std::string_view text) {
    try {
        return t.encode(text);
    } catch (const Error &) {
        return std::nullopt;
    }
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Interpolated bigram probabilities recounted from the raw corpus: every line is
// [start] tokens... [eos]; the start context never counts as an observed token.
class CountingOracle {
public:
    CountingOracle(const Tokenizer &tokenizer, const std::vector<std::string> &lines, double lambda)
        : m_vocab(tokenizer.vocab_size()), m_lambda(lambda) {
        for (const auto &line : lines) {
            TokenSeq seq = tokenizer.encode(line);
            if (tokenizer.eos_id()) {
                seq.push_back(*tokenizer.eos_id());
            }
            long prev = kStart;
            for (TokenId w : seq) {
                ++m_pair[{prev, w}];
                ++m_context[prev];
                ++m_unigram[w];
                ++m_total;
                prev = w;
            }
        }
    }

    static constexpr long kStart = -1;

    long double probability(long prev, TokenId w) const {
        const long double uni = (count(m_unigram, w) + 1.0L) / (static_cast<long double>(m_total) + m_vocab);
        const auto ctx = m_context.find(prev);
        if (ctx == m_context.end()) {
            return uni;
        }
        const auto pair = m_pair.find({prev, w});
        const long double c = pair == m_pair.end() ? 0.0L : static_cast<long double>(pair->second);
        return m_lambda * c / static_cast<long double>(ctx->second) + (1.0L - m_lambda) * uni;
    }

    TokenId argmax(long prev) const {
        TokenId best = 0;
        long double best_p = -1.0L;
        for (std::size_t w = 0; w < m_vocab; ++w) {
            const long double p = probability(prev, static_cast<TokenId>(w));
            if (p > best_p) {
                best_p = p;
                best = static_cast<TokenId>(w);
            }
        }
        return best;
    }

    // exp(-(1/n) ln prod p_i) for tokens following context.
    long double perplexity(const TokenSeq &context, const TokenSeq &tokens) const {
        long double product = 1.0L;
        long prev = context.empty() ? kStart : context.back();
        for (TokenId w : tokens) {
            product *= probability(prev, w);
            prev = w;
        }
        return std::exp(-std::log(product) / static_cast<long double>(tokens.size()));
    }

private:
    template <class Map, class Key> static long double count(const Map &map, const Key &key) {
        const auto it = map.find(key);
        return it == map.end() ? 0.0L : static_cast<long double>(it->second);
    }

    std::size_t m_vocab;
    long double m_lambda;
    std::map<std::pair<long, TokenId>, std::uint64_t> m_pair;
    std::map<long, std::uint64_t> m_context;
    std::map<TokenId, std::uint64_t> m_unigram;
    std::uint64_t m_total = 0;
};

struct MockModel {
    std::string name;
    TokenizerPtr tokenizer;
    std::vector<std::string> corpus;
    BackendPtr backend;
    CountingOracle oracle;

    MockModel(std::string id, TokenizerPtr t, const std::string &corpus_file)
        : name(std::move(id)), tokenizer(std::move(t)), corpus(read_lines(corpus_file)),
          backend(std::make_shared<NgramBackend>(name, tokenizer, corpus)), oracle(*tokenizer, corpus, 0.9) {}
};

const std::vector<MockModel> &mock_models() {
    static const std::vector<MockModel> models = [] {
        std::vector<MockModel> out;
        out.emplace_back("facts-a/word", toys().word, "corpora/facts_a.txt");
        out.emplace_back("facts-b/sp", toys().sp, "corpora/facts_b.txt");
        out.emplace_back("facts-a/bpe", toys().bpe, "corpora/facts_a.txt");
        out.emplace_back("facts-b/byte", toys().byte, "corpora/facts_b.txt");
        return out;
    }();
    return models;
}

// Prompts mixing corpus prefixes and random encodable text.
std::string random_prompt(TextGenerator &gen, const std::vector<std::string> &corpus) {
    if (gen.coin(0.5)) {
        const std::string &line = corpus[gen.below(corpus.size())];
        const auto words = split_words(line);
        const std::size_t n = gen.below(words.size() + 1);
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            out += words[i];
        }
        return out;
    }
    return gen.text(6);
}

// ---------------------------------------------------------------------------

Outcome identity_reduction() {
    Outcome out;
    TextGenerator gen(1001);
    std::size_t prompts = 0;
    for (const MockModel &model : mock_models()) {
        const std::vector<BackendPtr> one = {model.backend};
        for (int i = 0; i < 50; ++i) {
            const std::string prompt = random_prompt(gen, model.corpus);
            FusionConfig config;
            config.segment_mode = gen.coin(0.5) ? SegmentMode::Aligned : SegmentMode::Shortest;
            config.max_iterations = 10000;
            config.max_new_chars = 24 + gen.below(40);

            // Plain greedy decoding straight from the recounted model.
            TokenSeq tokens = model.tokenizer->encode(prompt);
            std::string expected;
            while (true) {
                const TokenId next = model.oracle.argmax(tokens.empty() ? CountingOracle::kStart : tokens.back());
                if (next == model.tokenizer->eos_id()) {
                    break;
                }
                tokens.push_back(next);
                const std::string full = model.tokenizer->decode_raw(tokens);
                expected = full.substr(prompt.size());
                if (utf8::count_code_points(expected) >= config.max_new_chars + 1) {
                    break;
                }
            }
            expected = expected.substr(0, utf8::prefix_bytes(expected, config.max_new_chars));

            const FusionResult fused = fuse(prompt, one, config);
            ++prompts;
            out.require(fused.joint_text == expected, model.name + " prompt " + json_quoted(prompt) + ": fused " +
                                                          json_quoted(fused.joint_text) + " vs greedy " + json_quoted(expected));
        }
    }
    out.detail = std::to_string(prompts) + " prompts over " + std::to_string(mock_models().size()) +
                 " single-backend configurations";
    return out;
}

Outcome perplexity_oracle() {
    Outcome out;
    TextGenerator gen(2002);
    std::size_t pairs = 0;
    double worst = 0.0;
    for (const MockModel &model : mock_models()) {
        std::size_t here = 0;
        for (int attempt = 0; here < 1000 && attempt < 20000; ++attempt) {
            const std::string context = random_prompt(gen, model.corpus);
            std::string segment;
            if (gen.coin(0.5)) {
                const auto words = split_words(model.corpus[gen.below(model.corpus.size())]);
                const std::size_t from = gen.below(words.size());
                const std::size_t n = 1 + gen.below(4);
                for (std::size_t i = from; i < std::min(words.size(), from + n); ++i) {
                    segment += words[i];
                }
            } else {
                segment = gen.text(4);
            }
            if (segment.empty()) {
                continue;
            }
            const auto full = try_encode(*model.tokenizer, context + segment);
            const auto ctx = try_encode(*model.tokenizer, context);
            if (!full || !ctx || !starts_with(*full, *ctx) || full->size() == ctx->size()) {
                continue;
            }
            const TokenSeq tail(full->begin() + static_cast<std::ptrdiff_t>(ctx->size()), full->end());
            const long double expected = model.oracle.perplexity(*ctx, tail);

            auto session = model.backend->open_session(context);
            const TextScore score = session->score_text(segment);
            const double ppl = perplexity(score.nll_sum, score.token_count);
            const double err = rel_err(ppl, static_cast<double>(expected));
            worst = std::max(worst, err);
            out.require(score.token_count == tail.size() && err <= 1e-9,
                        model.name + " " + json_quoted(context) + " + " + json_quoted(segment) + ": ppl " +
                            std::to_string(ppl) + " vs " + std::to_string(static_cast<double>(expected)));
            ++here;
        }
        out.require(here >= 1000, model.name + ": only " + std::to_string(here) + " usable pairs");
        pairs += here;
    }
    std::ostringstream detail;
    detail << pairs << " (context, segment) pairs, max relative error " << worst;
    out.detail = detail.str();
    return out;
}

Outcome two_model_average() {
    Outcome out;
    const std::vector<double> ppls = {16.6, 15.3};
    const double avg = average_perplexity(ppls);
    out.require(rel_err(avg, 15.95) <= 1e-15, "average " + std::to_string(avg));
    const std::vector<double> reversed = {15.3, 16.6};
    out.require(average_perplexity(reversed) == avg, "order dependence");
    const std::vector<RankedCandidate> cands = {{avg, 0}, {152.2, 1}};
    out.require(select_winner(cands) == 0, "winner is not the 15.95 candidate");
    const std::vector<RankedCandidate> swapped = {{152.2, 0}, {avg, 1}};
    out.require(select_winner(swapped) == 1, "winner depends on position");

    // The same scores arising from per-token NLLs.
    const std::vector<double> lead = {std::log(16.6)};
    const std::vector<double> second = {std::log(15.3), std::log(15.3)};
    const std::vector<double> from_nll = {perplexity(lead), perplexity(second)};
    out.require(rel_err(average_perplexity(from_nll), 15.95) <= 1e-12, "average from NLLs");
    const std::vector<double> trained = {perplexity(std::vector<double>{std::log(290.4)}),
                                         perplexity(std::vector<double>{std::log(14.0)})};
    out.require(rel_err(average_perplexity(trained), 152.2) <= 1e-12, "152.2 from NLLs");

    std::ostringstream detail;
    detail.precision(17);
    detail << "average_perplexity([16.6, 15.3]) = " << avg << ", winner 15.95 over 152.2";
    out.detail = detail.str();
    return out;
}

// Offsets o in (0, |text|] where prefix text[0, o) ends a segment for t when
// text follows context: the prefix's own encoding is a prefix of the whole
// encoding and, for tokenizers with word information, a word starts right after it.
std::set<std::size_t> brute_force_boundaries(const Tokenizer &t, const std::string &context, const std::string &text) {
    const TokenSeq whole = t.encode(context + text);
    std::set<std::size_t> word_starts;
    if (t.category() != TokenizerCategory::Opaque) {
        for (const auto &w : t.word_boundaries(whole)) {
            word_starts.insert(w.first_token);
        }
    }
    std::set<std::size_t> out;
    for (std::size_t o : textfuse::testing::char_boundaries(text)) {
        if (o == 0) {
            continue;
        }
        const auto prefix = try_encode(t, context + text.substr(0, o));
        if (!prefix || !starts_with(whole, *prefix)) {
            continue;
        }
        if (t.category() != TokenizerCategory::Opaque && prefix->size() != whole.size() &&
            !word_starts.count(prefix->size())) {
            continue;
        }
        out.insert(o);
    }
    return out;
}

Outcome alignment_minimality() {
    Outcome out;
    TextGenerator gen(3003);
    const auto &all = toys().all();
    std::vector<std::vector<TokenizerPtr>> sets;
    for (const auto &a : all) {
        for (const auto &b : all) {
            if (a != b) {
                sets.push_back({a, b});
            }
        }
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        std::vector<TokenizerPtr> rotated;
        for (std::size_t j = 0; j < all.size(); ++j) {
            rotated.push_back(all[(i + j) % all.size()]);
        }
        sets.push_back(rotated);
    }

    std::vector<std::pair<std::string, std::string>> corpus; // context, text
    while (corpus.size() < 1000) {
        std::string context = gen.text(4);
        std::string text = " " + gen.text(8);
        if (text.size() > 1) {
            corpus.emplace_back(std::move(context), std::move(text));
        }
    }

    SegmenterOptions options;
    options.token_cap = 1024;
    std::size_t segments = 0;
    std::size_t runs = 0;
    std::size_t skipped = 0;
    std::size_t extended = 0;
    for (const auto &set : sets) {
        std::vector<const Tokenizer *> raw;
        for (const auto &t : set) {
            raw.push_back(t.get());
        }
        const Tokenizer &origin = *set[0];
        for (const auto &[context, text] : corpus) {
            bool usable = true;
            std::set<std::size_t> common;
            std::set<std::size_t> own;
            for (std::size_t k = 0; k < set.size() && usable; ++k) {
                const auto whole = try_encode(*set[k], context + text);
                const auto ctx = try_encode(*set[k], context);
                if (!whole || !ctx || !starts_with(*whole, *ctx)) {
                    usable = false;
                    break;
                }
                const auto b = brute_force_boundaries(*set[k], context, text);
                if (k == 0) {
                    own = b;
                    common = b;
                } else {
                    std::set<std::size_t> both;
                    std::set_intersection(common.begin(), common.end(), b.begin(), b.end(),
                                          std::inserter(both, both.begin()));
                    common = std::move(both);
                }
            }
            if (!usable) {
                ++skipped;
                continue;
            }
            ++runs;
            const TokenSeq whole = origin.encode(context + text);
            const std::size_t ctx_len = origin.encode(context).size();
            const TokenSeq stream(whole.begin() + static_cast<std::ptrdiff_t>(ctx_len), whole.end());
            std::size_t consumed = 0;
            std::size_t start = 0;
            while (consumed < stream.size()) {
                VectorTokenSource source(steps_from_tokens(
                    std::span<const TokenId>(stream).subspan(consumed), origin.eos_id()));
                const Segment seg =
                    aligned_segment(source, origin, raw, context + text.substr(0, start), options);
                ++segments;
                const std::size_t end = start + seg.text.size();
                const std::string where = origin.name() + "+" + std::to_string(set.size() - 1) + " others, " +
                                          json_quoted(context) + " | " + json_quoted(text) + " segment " + json_quoted(seg.text);
                if (seg.text.empty() || text.compare(start, seg.text.size(), seg.text) != 0) {
                    out.fail(where + ": not the next piece of the stream");
                    break;
                }
                // Minimality: no common boundary strictly inside the segment.
                const auto inside = common.upper_bound(start);
                out.require(inside == common.end() || *inside >= end, where + ": common boundary at " +
                                                                          std::to_string(*inside) + " inside");
                // Soundness: the end is common unless the stream ran out.
                out.require(end == text.size() || common.count(end) == 1, where + ": end is not common");
                const auto own_next = own.upper_bound(start);
                if (own_next != own.end() && *own_next < end) {
                    ++extended;
                }
                consumed += seg.origin_tokens.size();
                start = end;
                if (seg.eos) {
                    break;
                }
            }
            out.require(start == text.size(), "stream not fully segmented for " + json_quoted(text));
        }
    }
    out.require(runs >= 1000, "only " + std::to_string(runs) + " usable runs");
    out.detail = std::to_string(corpus.size()) + " strings, " + std::to_string(sets.size()) + " tokenizer sets, " +
                 std::to_string(runs) + " streams (" + std::to_string(skipped) + " skipped), " +
                 std::to_string(segments) + " segments, " + std::to_string(extended) +
                 " extended past the origin's first boundary";
    return out;
}

Outcome incremental_codec() {
    Outcome out;
    TextGenerator gen(4004);
    const CodecWindow window(4);
    std::vector<std::string> texts;
    for (const auto &line : read_lines("corpora/facts_a.txt")) {
        texts.push_back(line);
    }
    while (texts.size() < 2000) {
        texts.push_back(gen.text(12));
    }

    std::size_t encode_checks = 0;
    std::size_t merged = 0;
    std::size_t decode_checks = 0;
    for (const auto &tp : toys().all()) {
        const Tokenizer &t = *tp;
        for (int i = 0; i < 5000; ++i) {
            const std::string &text = texts[gen.below(texts.size())];
            const auto cuts = textfuse::testing::char_boundaries(text);
            const std::size_t cut = cuts[gen.below(cuts.size())];
            const std::string context = text.substr(0, cut);
            const std::string rest = text.substr(cut);
            const TokenSeq whole = t.encode(text);
            const TokenSeq head = t.encode(context);
            const auto words = last_words(context, window);
            const std::string where = t.name() + " " + json_quoted(context) + " | " + json_quoted(rest);

            // Encoding.
            if (starts_with(whole, head)) {
                const TokenSeq expected(whole.begin() + static_cast<std::ptrdiff_t>(head.size()), whole.end());
                try {
                    out.require(encode_incremental(t, words, rest, window) == expected, where + ": encode differs");
                } catch (const Error &e) {
                    out.fail(where + ": encode threw " + e.what());
                }
                ++encode_checks;
            } else {
                ++merged;
                try {
                    encode_incremental(t, words, rest, window);
                    out.fail(where + ": merge across the split was not reported");
                } catch (const Error &e) {
                    out.require(e.code() == ErrorCode::WindowMismatch, where + ": wrong error " + e.what());
                }
            }

            // Decoding a token split of the full encoding.
            const std::size_t j = gen.below(whole.size() + 1);
            const std::size_t m = j + gen.below(whole.size() - j + 1);
            const std::span<const TokenId> all(whole);
            const auto prefix_text = t.decode(all.first(j));
            if (!prefix_text) {
                continue;
            }
            const auto full_text = t.decode(all.first(m));
            std::optional<std::string> expected;
            if (full_text && full_text->starts_with(*prefix_text)) {
                expected = full_text->substr(prefix_text->size());
            }
            const auto ctx_words = last_words(*prefix_text, window);
            const TokenSeq tail = t.encode(join_words(ctx_words));
            try {
                const auto got = decode_incremental(t, ctx_words, tail, all.subspan(j, m - j), window);
                out.require(got == expected, t.name() + " decode of tokens [" + std::to_string(j) + ", " +
                                                 std::to_string(m) + ") after " + json_quoted(*prefix_text));
            } catch (const Error &e) {
                out.fail(t.name() + " decode threw " + e.what());
            }
            ++decode_checks;
        }
    }
    out.require(encode_checks >= 10000 && decode_checks >= 10000, "too few splits");
    out.detail = std::to_string(encode_checks) + " encode splits (" + std::to_string(merged) +
                 " merging splits rejected) and " + std::to_string(decode_checks) +
                 " decode splits with k=4, byte-exact";
    return out;
}

Outcome complementarity() {
    Outcome out;
    const HarnessConfig config = load_config(data_path("configs/colors.toml"));
    const auto backends = build_backends(config);
    const TaskSpec &task = config.tasks.at(0);

    // Recounted models over the same corpora, tokenizers and weights.
    std::vector<CountingOracle> oracles;
    for (std::size_t b = 0; b < backends.size(); ++b) {
        std::ifstream in(config.backends[b].corpus);
        std::vector<std::string> lines;
        for (std::string line; std::getline(in, line);) {
            lines.push_back(line);
        }
        oracles.emplace_back(backends[b]->tokenizer(), lines, config.backends[b].lambda);
    }
    std::set<std::string> colors;
    for (const auto &item : task.items) {
        colors.insert(item.answer);
    }

    const std::vector<std::string> modes = {"single:" + backends[0]->model_id(), "single:" + backends[1]->model_id(),
                                            "cool", "rerank", "cool+r"};
    std::map<std::string, std::size_t> correct;
    std::map<std::string, std::size_t> correct_on_known;
    std::size_t known = 0;
    for (const auto &item : task.items) {
        const std::string prompt = render_prompt(task, item.input);

        // Enumeration oracle: the answer with the lowest averaged perplexity.
        std::string best;
        long double best_avg = 0.0L;
        for (const auto &color : colors) {
            const std::string answer = " " + color + " .";
            long double sum = 0.0L;
            for (std::size_t b = 0; b < backends.size(); ++b) {
                const Tokenizer &t = backends[b]->tokenizer();
                const TokenSeq ctx = t.encode(prompt);
                const TokenSeq whole = t.encode(prompt + answer);
                const TokenSeq tail(whole.begin() + static_cast<std::ptrdiff_t>(ctx.size()), whole.end());
                sum += oracles[b].perplexity(ctx, tail);
            }
            const long double avg = sum / static_cast<long double>(backends.size());
            if (best.empty() || avg < best_avg) {
                best = color;
                best_avg = avg;
            }
        }
        const bool knowable = best == item.answer;
        known += knowable ? 1 : 0;

        for (const auto &name : modes) {
            const RunMode mode = RunMode::parse(name);
            std::string generation;
            if (mode.fusion) {
                FusionConfig fusion = config.fusion;
                fusion.mode = *mode.fusion;
                generation = fuse(prompt, backends, fusion).chosen_text;
            } else {
                const auto it = std::find_if(backends.begin(), backends.end(),
                                             [&](const BackendPtr &b) { return b->model_id() == mode.single_model; });
                generation = greedy_decode(prompt, **it, config.fusion).text;
            }
            const auto answer = extract_answer(generation, task);
            const bool ok = answer && *answer == item.answer;
            correct[name] += ok ? 1 : 0;
            correct_on_known[name] += ok && knowable ? 1 : 0;
        }
    }
    const std::size_t best_single = std::max(correct[modes[0]], correct[modes[1]]);
    out.require(correct["cool"] >= best_single, "cool below the best single model");
    out.require(correct["cool+r"] >= best_single, "cool+r below the best single model");
    out.require(correct_on_known["cool+r"] >= correct_on_known["cool"], "cool+r below cool on knowable items");
    out.require(correct_on_known["cool+r"] >= correct_on_known["rerank"], "cool+r below rerank on knowable items");
    out.require(known * 2 >= task.items.size(), "enumeration oracle recovers too few gold answers");
    out.require(best_single < task.items.size(), "the task is not complementary");

    std::ostringstream detail;
    detail << "accuracy over " << task.items.size() << " items:";
    for (const auto &name : modes) {
        detail << " " << name << "=" << correct[name];
    }
    detail << "; oracle-knowable " << known << ", cool+r " << correct_on_known["cool+r"] << " / cool "
           << correct_on_known["cool"] << " / rerank " << correct_on_known["rerank"] << " on them";
    out.detail = detail.str();
    return out;
}

Outcome golden_trace() {
    Outcome out;
    const auto path = data_path("configs/golden.toml");
    const std::string prompt = "LLMs are";
    const auto run = [&](bool parallel) {
        HarnessConfig config = load_config(path);
        config.fusion.parallel = parallel;
        const auto backends = build_backends(config);
        const FusionResult result = fuse(prompt, backends, config.fusion);
        std::ostringstream jsonl;
        write_trace_jsonl(jsonl, result);
        return std::make_pair(result, jsonl.str());
    };
    const auto [result, bytes] = run(false);
    const auto again = run(false).second;
    const auto parallel = run(true).second;
    out.require(bytes == again, "rerun differs");
    out.require(bytes == parallel, "parallel run differs");

    std::ifstream stored_in(data_path("golden/golden_trace.jsonl"), std::ios::binary);
    std::ostringstream stored;
    stored << stored_in.rdbuf();
    out.require(bytes == stored.str(), "differs from the stored trace");

    // Hand-derived: both scripts agree except after "are" (second proposes
    // " trained", ppl 152.2 on average) and after "ones" (" that" beats " who").
    const std::vector<std::string> words = {" not",  " the", " only", " ones", " that",   " can",
                                            " be",   " used", " for", " this", " purpose"};
    std::vector<std::string> winners(words.size(), "lead");
    winners[4] = "second";
    out.require(result.trace.size() == words.size(), "iteration count " + std::to_string(result.trace.size()));
    for (std::size_t i = 0; i < std::min(words.size(), result.trace.size()); ++i) {
        out.require(result.trace[i].winner_model == winners[i] && result.trace[i].winner_text == words[i],
                    "iteration " + std::to_string(i) + ": " + result.trace[i].winner_model + " " +
                        json_quoted(result.trace[i].winner_text));
    }
    out.require(result.stop_reason == StopReason::Eos, "stop reason");
    if (!result.trace.empty() && result.trace[0].candidates.size() == 2) {
        const auto &c = result.trace[0].candidates;
        out.require(rel_err(*c[0].score.avg_ppl, 15.95) <= 1e-9, "first average");
        out.require(rel_err(c[0].score.per_model[0]->ppl, 16.6) <= 1e-9, "first lead ppl");
        out.require(rel_err(c[0].score.per_model[1]->ppl, 15.3) <= 1e-9, "first second ppl");
        out.require(rel_err(*c[1].score.avg_ppl, 152.2) <= 1e-9, "first rival average");
    } else {
        out.fail("first iteration shape");
    }
    if (result.trace.size() > 4 && result.trace[4].candidates.size() == 2) {
        const auto &c = result.trace[4].candidates;
        const double e = std::exp(1.0);
        out.require(rel_err(*c[0].score.avg_ppl, (e + std::exp(3.0)) / 2) <= 1e-9, "fifth lead average");
        out.require(rel_err(*c[1].score.avg_ppl, (std::exp(0.5) + e) / 2) <= 1e-9, "fifth second average");
    } else {
        out.fail("fifth iteration shape");
    }
    out.detail = std::to_string(result.trace.size()) + " iterations, winners lead x4, second, lead x6; " +
                 std::to_string(bytes.size()) + " trace bytes identical across reruns";
    return out;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"identity-reduction", identity_reduction},   {"perplexity-oracle", perplexity_oracle},
        {"two-model-average", two_model_average},     {"alignment-minimality", alignment_minimality},
        {"incremental-codec", incremental_codec},     {"complementarity", complementarity},
        {"golden-trace", golden_trace},
    };
    bool all_pass = true;
    for (const auto &[name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception &e) {
            outcome.fail(std::string("exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all_pass = all_pass && outcome.pass;
        std::ostringstream line;
        line.precision(2);
        line << std::fixed << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail << " ["
             << seconds << "s]";
        if (!outcome.pass) {
            line << " (" << outcome.failure_count << " failures";
            for (const auto &f : outcome.failures) {
                line << "; " << f;
            }
            line << ")";
        }
        std::cout << line.str() << std::endl;
    }
    return all_pass ? 0 : 1;
}

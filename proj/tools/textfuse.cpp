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

// textfuse command-line tool.
//
//   textfuse fuse --config run.toml --prompt "..." [--mode cool|rerank|cool+r|single:<id>]
//   textfuse eval --config run.toml [--mode ...]... [--segment shortest|aligned]
//   textfuse protocol-serve-mock --config run.toml --backend <id> --port <n>
//   textfuse diag vocab-overlap (--config run.toml | --tokenizer a.json --tokenizer b.json)
//
// Exit codes: 0 success, 2 configuration error, 3 backend failure, 1 otherwise.

#include "textfuse/engine.hpp"
#include "textfuse/error.hpp"
#include "textfuse/harness.hpp"
#include "textfuse/remote.hpp"
#include "textfuse/tokenizer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace textfuse;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct Common {
    std::string config;
    std::string segment;
    std::optional<std::uint64_t> seed;
};

HarnessConfig load(const Common &common) {
    HarnessConfig config = load_config(common.config);
    if (!common.segment.empty()) {
        try {
            config.fusion.segment_mode = segment_mode_from_name(common.segment);
        } catch (const Error &) {
            throw Error(ErrorCode::ConfigError, "--segment must be shortest or aligned");
        }
    }
    if (common.seed) {
        config.seed = *common.seed;
    }
    return config;
}

nlohmann::ordered_json score_summary(const SegmentScore &score) {
    return score.avg_ppl ? nlohmann::ordered_json(*score.avg_ppl) : nlohmann::ordered_json(nullptr);
}

int run_fuse(const Common &common, const std::string &prompt, const std::string &mode_name,
             const std::string &trace_out) {
    HarnessConfig config = load(common);
    const auto backends = build_backends(config);
    const RunMode mode = mode_name.empty() ? RunMode{config.fusion.mode, {}} : RunMode::parse(mode_name);

    nlohmann::ordered_json out;
    out["mode"] = mode.name();
    if (!mode.fusion) {
        for (const auto &backend : backends) {
            if (backend->model_id() == mode.single_model) {
                const GreedyResult greedy = greedy_decode(prompt, *backend, config.fusion);
                out["chosen_text"] = greedy.text;
                out["chosen_source"] = mode.single_model;
                out["stop_reason"] = stop_reason_name(greedy.stop_reason);
                std::cout << out.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << "\n";
                return 0;
            }
        }
        throw Error(ErrorCode::ConfigError, "unknown backend '" + mode.single_model + "'");
    }

    config.fusion.mode = *mode.fusion;
    const FusionResult result = fuse(prompt, backends, config.fusion);
    out["chosen_text"] = result.chosen_text;
    out["chosen_source"] = result.chosen_source;
    if (config.fusion.mode != FusionMode::Rerank) {
        out["joint_text"] = result.joint_text;
        out["stop_reason"] = stop_reason_name(result.stop_reason);
        out["iterations"] = result.trace.size();
    }
    if (!result.rerank.empty()) {
        nlohmann::ordered_json rerank = nlohmann::ordered_json::array();
        for (const auto &entry : result.rerank) {
            rerank.push_back({{"source", entry.source}, {"text", entry.text}, {"avg_ppl", score_summary(entry.score)}});
        }
        out["rerank"] = std::move(rerank);
    }
    std::cout << out.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << "\n";

    if (!trace_out.empty()) {
        if (trace_out == "-") {
            write_trace_jsonl(std::cout, result);
        } else {
            std::ofstream file(trace_out, std::ios::binary);
            if (!file) {
                throw Error(ErrorCode::InvalidArgument, "cannot write " + trace_out);
            }
            write_trace_jsonl(file, result);
        }
    }
    return 0;
}

int run_eval_verb(const Common &common, const std::vector<std::string> &modes, const std::string &output_dir) {
    HarnessConfig config = load(common);
    if (!modes.empty()) {
        config.modes.clear();
        for (const auto &name : modes) {
            config.modes.push_back(RunMode::parse(name));
        }
    }
    if (!output_dir.empty()) {
        config.output_dir = output_dir;
    }
    const auto backends = build_backends(config);
    const RunReport report = run_eval(config, backends);
    for (const auto &cell : report.cells) {
        std::printf("%-24s %-16s %4zu/%-4zu %.4f\n", cell.task.c_str(), cell.mode.c_str(), cell.correct, cell.total,
                    cell.accuracy);
    }
    std::printf("report: %s\n", (config.output_dir / "report.json").string().c_str());
    return 0;
}

int run_serve(const Common &common, const std::string &backend_id, const std::string &host, int port) {
    const HarnessConfig config = load(common);
    const auto backends = build_backends(config);
    for (const auto &backend : backends) {
        if (backend->model_id() != backend_id) {
            continue;
        }
        if (backend->descriptor().kind == BackendKind::Remote) {
            throw Error(ErrorCode::ConfigError, "backend '" + backend_id + "' is remote, not a mock");
        }
        ProtocolServer server(backend);
        const int bound = server.bind(host, port);
        std::printf("serving %s on http://%s:%d\n", backend_id.c_str(), host.c_str(), bound);
        std::fflush(stdout);
        server.listen();
        return 0;
    }
    throw Error(ErrorCode::ConfigError, "unknown backend '" + backend_id + "'");
}

int run_overlap(const Common &common, const std::vector<std::string> &tokenizer_files) {
    std::vector<std::pair<std::string, TokenizerPtr>> tokenizers;
    if (!tokenizer_files.empty()) {
        for (const auto &file : tokenizer_files) {
            tokenizers.emplace_back(file, load_tokenizer(file));
        }
    } else if (!common.config.empty()) {
        const HarnessConfig config = load(common);
        for (const auto &spec : config.backends) {
            tokenizers.emplace_back(spec.id, load_tokenizer(spec.tokenizer));
        }
    } else {
        throw Error(ErrorCode::ConfigError, "give --config or at least two --tokenizer files");
    }
    if (tokenizers.size() < 2) {
        throw Error(ErrorCode::ConfigError, "vocab-overlap needs at least two tokenizers");
    }
    for (std::size_t i = 0; i < tokenizers.size(); ++i) {
        for (std::size_t j = i + 1; j < tokenizers.size(); ++j) {
            std::printf("%s\t%s\t%.6f\n", tokenizers[i].first.c_str(), tokenizers[j].first.c_str(),
                        vocab_overlap(*tokenizers[i].second, *tokenizers[j].second));
        }
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Training-free fusion of language models with different tokenizers"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&common](CLI::App *sub, bool config_required) {
        auto *opt = sub->add_option("--config", common.config, "TOML run configuration");
        if (config_required) {
            opt->required();
        }
        sub->add_option("--segment", common.segment, "segment mode: shortest or aligned");
        sub->add_option("--seed", common.seed, "seed for n-gram corpus shuffling");
    };

    std::string prompt;
    std::string mode;
    std::string trace_out;
    auto *fuse_cmd = app.add_subcommand("fuse", "fuse one prompt and print the result");
    add_common(fuse_cmd, true);
    fuse_cmd->add_option("--prompt", prompt, "prompt text")->required();
    fuse_cmd->add_option("--mode", mode, "cool, rerank, cool+r or single:<model>");
    fuse_cmd->add_option("--trace-out", trace_out, "write the trace as JSON lines ('-' for stdout)");

    std::vector<std::string> eval_modes;
    std::string output_dir;
    auto *eval_cmd = app.add_subcommand("eval", "evaluate the configured tasks");
    add_common(eval_cmd, true);
    eval_cmd->add_option("--mode", eval_modes, "modes to run (repeatable); overrides [eval].modes");
    eval_cmd->add_option("--output-dir", output_dir, "directory for report, logs and traces");

    std::string backend_id;
    std::string host = "127.0.0.1";
    int port = 0;
    auto *serve_cmd = app.add_subcommand("protocol-serve-mock", "serve a mock backend over the wire protocol");
    add_common(serve_cmd, true);
    serve_cmd->add_option("--backend", backend_id, "backend id from the configuration")->required();
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "port (0 picks a free one)");

    std::vector<std::string> tokenizer_files;
    auto *diag_cmd = app.add_subcommand("diag", "diagnostics");
    diag_cmd->require_subcommand(1);
    auto *overlap_cmd = diag_cmd->add_subcommand("vocab-overlap", "pairwise vocabulary overlap");
    add_common(overlap_cmd, false);
    overlap_cmd->add_option("--tokenizer", tokenizer_files, "tokenizer JSON (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (fuse_cmd->parsed()) {
            return run_fuse(common, prompt, mode, trace_out);
        }
        if (eval_cmd->parsed()) {
            return run_eval_verb(common, eval_modes, output_dir);
        }
        if (serve_cmd->parsed()) {
            return run_serve(common, backend_id, host, port);
        }
        if (overlap_cmd->parsed()) {
            return run_overlap(common, tokenizer_files);
        }
    } catch (const Error &e) {
        std::fprintf(stderr, "textfuse: %s\n", e.what());
        if (e.code() == ErrorCode::ConfigError) {
            return kExitConfig;
        }
        if (e.code() == ErrorCode::BackendUnavailable) {
            return kExitBackend;
        }
        return kExitOther;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "textfuse: %s\n", e.what());
        return kExitOther;
    }
    return kExitOther;
}

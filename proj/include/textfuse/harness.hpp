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
#include "textfuse/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace textfuse {

struct BackendSpec {
    std::string id;
    std::string kind; // ngram | scripted | remote
    std::filesystem::path tokenizer;
    std::filesystem::path corpus;  // ngram: one sentence per line
    double lambda = 0.9;           // ngram
    double train_fraction = 1.0;   // ngram: share of shuffled corpus lines kept
    std::filesystem::path script;  // scripted
    std::string endpoint;          // remote, e.g. http://127.0.0.1:8080
};

struct TaskItem {
    std::string input;
    std::string answer;
};

struct TaskSpec {
    std::string name;
    std::string prompt_template = "{shots}{input}"; // slots: {shots}, {input}
    std::string shot_template = "{input}{answer}\n"; // slots: {input}, {answer}
    std::size_t n_shot = 0;
    std::string extractor; // ECMAScript regex; group 1 when present, else the whole match
    std::vector<TaskItem> shots;
    std::vector<TaskItem> items;
};

// One evaluation column: a fusion mode or a single backend decoded greedily.
struct RunMode {
    std::optional<FusionMode> fusion;
    std::string single_model;

    std::string name() const;
    static RunMode parse(std::string_view text); // cool | rerank | cool+r | single:<model>
};

struct HarnessConfig {
    std::vector<BackendSpec> backends;
    FusionConfig fusion;
    std::vector<RunMode> modes;
    std::filesystem::path output_dir = "textfuse-out";
    bool parallel_items = false;
    std::uint64_t seed = 0;
    std::vector<TaskSpec> tasks;
};

// Relative paths in the file resolve against its directory. Throws
// Error(ConfigError) naming the missing or malformed field.
HarnessConfig parse_config(std::string_view toml_text, const std::filesystem::path &base_dir);
HarnessConfig load_config(const std::filesystem::path &path);

// Throws Error(ConfigError) for unreadable inputs; remote backends are not contacted.
std::vector<BackendPtr> build_backends(const HarnessConfig &config);

std::string render_prompt(const TaskSpec &task, std::string_view input);

// Last match of the task's extractor in generation.
std::optional<std::string> extract_answer(std::string_view generation, const TaskSpec &task);
std::optional<std::string> extract_answer(std::string_view generation, std::string_view pattern);

struct ItemLog {
    std::size_t index = 0;
    std::string input;
    std::string gold;
    std::string generation;
    std::optional<std::string> answer;
    bool correct = false;
};

struct CellReport {
    std::string task;
    std::string mode;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
    std::filesystem::path log_path;   // per-item JSONL, relative to output_dir
    std::filesystem::path trace_path; // fusion trace JSONL, relative to output_dir; empty for single-model cells
};

struct RunReport {
    std::vector<CellReport> cells;
};

// Runs every (task, mode) cell. With write_files, per-item logs, traces and
// report.json go under config.output_dir.
RunReport run_eval(const HarnessConfig &config, std::span<const BackendPtr> backends, bool write_files = true);

std::string report_json(const RunReport &report);

} // namespace textfuse

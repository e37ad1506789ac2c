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

#include "textfuse/harness.hpp"

#include "textfuse/error.hpp"
#include "textfuse/ngram.hpp"
#include "textfuse/remote.hpp"
#include "textfuse/scripted.hpp"
#include "textfuse/toml.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <random>
#include <regex>
#include <sstream>

namespace textfuse {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string &message) { throw Error(ErrorCode::ConfigError, message); }

std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        config_error("cannot read " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string> read_lines(const fs::path &path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(std::move(line));
        }
    }
    return lines;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

void replace_all(std::string &text, std::string_view slot, std::string_view value) {
    for (std::size_t pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos + value.size())) {
        text.replace(pos, slot.size(), value);
    }
}

// Typed access to one TOML table; errors name the field by its path.
class Fields {
public:
    Fields(const json &table, std::string where) : m_table(table), m_where(std::move(where)) {
        if (!m_table.is_object()) {
            config_error("'" + m_where + "' must be a table");
        }
    }

    bool has(const std::string &key) const { return m_table.contains(key); }

    std::string path(const std::string &key) const { return m_where.empty() ? key : m_where + "." + key; }

    const json &require(const std::string &key) const {
        if (!has(key)) {
            config_error("missing field '" + path(key) + "'");
        }
        return m_table.at(key);
    }

    std::string string(const std::string &key) const {
        const json &v = require(key);
        if (!v.is_string()) {
            config_error("field '" + path(key) + "' must be a string");
        }
        return v.get<std::string>();
    }
    std::string string(const std::string &key, const std::string &fallback) const {
        return has(key) ? string(key) : fallback;
    }

    double number(const std::string &key, double fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json &v = m_table.at(key);
        if (!v.is_number()) {
            config_error("field '" + path(key) + "' must be a number");
        }
        return v.get<double>();
    }

    std::size_t count(const std::string &key, std::size_t fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json &v = m_table.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            config_error("field '" + path(key) + "' must be a non-negative integer");
        }
        return static_cast<std::size_t>(v.get<std::int64_t>());
    }

    bool flag(const std::string &key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json &v = m_table.at(key);
        if (!v.is_boolean()) {
            config_error("field '" + path(key) + "' must be true or false");
        }
        return v.get<bool>();
    }

    std::vector<std::string> strings(const std::string &key) const {
        const json &v = require(key);
        if (!v.is_array()) {
            config_error("field '" + path(key) + "' must be an array of strings");
        }
        std::vector<std::string> out;
        for (const auto &item : v) {
            if (!item.is_string()) {
                config_error("field '" + path(key) + "' must be an array of strings");
            }
            out.push_back(item.get<std::string>());
        }
        return out;
    }

private:
    const json &m_table;
    std::string m_where;
};

std::vector<TaskItem> zip_items(const Fields &f, const std::string &inputs_key, const std::string &answers_key) {
    const auto inputs = f.strings(inputs_key);
    const auto answers = f.strings(answers_key);
    if (inputs.size() != answers.size()) {
        config_error("fields '" + f.path(inputs_key) + "' and '" + f.path(answers_key) + "' differ in length");
    }
    std::vector<TaskItem> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        out.push_back({inputs[i], answers[i]});
    }
    return out;
}

std::vector<TaskItem> items_from_file(const fs::path &path) {
    std::vector<TaskItem> out;
    std::size_t line_no = 0;
    for (const auto &line : read_lines(path)) {
        ++line_no;
        const json item = json::parse(line, nullptr, false);
        if (!item.is_object() || !item.contains("input") || !item.contains("answer") || !item["input"].is_string() ||
            !item["answer"].is_string()) {
            config_error(path.string() + ":" + std::to_string(line_no) + ": expected {\"input\", \"answer\"}");
        }
        out.push_back({item["input"].get<std::string>(), item["answer"].get<std::string>()});
    }
    return out;
}

fs::path resolve(const fs::path &base, const std::string &p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

BackendSpec parse_backend(const json &table, std::size_t index, const fs::path &base) {
    const Fields f(table, "backend[" + std::to_string(index) + "]");
    BackendSpec spec;
    spec.id = f.string("id");
    spec.kind = f.string("kind");
    spec.tokenizer = resolve(base, f.string("tokenizer"));
    if (spec.kind == "ngram") {
        spec.corpus = resolve(base, f.string("corpus"));
        spec.lambda = f.number("lambda", spec.lambda);
        spec.train_fraction = f.number("train_fraction", spec.train_fraction);
        if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0)) {
            config_error("field '" + f.path("lambda") + "' must lie in [0, 1]");
        }
        if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
            config_error("field '" + f.path("train_fraction") + "' must lie in (0, 1]");
        }
    } else if (spec.kind == "scripted") {
        spec.script = resolve(base, f.string("script"));
    } else if (spec.kind == "remote") {
        spec.endpoint = f.string("endpoint");
    } else {
        config_error("field '" + f.path("kind") + "' must be ngram, scripted or remote");
    }
    return spec;
}

FusionConfig parse_fusion(const json &table) {
    const Fields f(table, "fusion");
    FusionConfig config;
    try {
        config.segment_mode = segment_mode_from_name(f.string("segment_mode", "aligned"));
    } catch (const Error &) {
        config_error("field 'fusion.segment_mode' must be shortest or aligned");
    }
    config.mode = fusion_mode_from_name(f.string("mode", "cool"));
    config.max_iterations = f.count("max_iterations", config.max_iterations);
    config.max_new_chars = f.count("max_new_chars", config.max_new_chars);
    if (f.has("stop_strings")) {
        config.stop_strings = f.strings("stop_strings");
    }
    config.segment_token_cap = f.count("segment_token_cap", config.segment_token_cap);
    config.codec_window_k = f.count("codec_window_k", config.codec_window_k);
    config.parallel = f.flag("parallel", config.parallel);
    config.validate();
    return config;
}

TaskSpec parse_task(const json &table, std::size_t index, const fs::path &base) {
    const Fields f(table, "task[" + std::to_string(index) + "]");
    TaskSpec task;
    task.name = f.string("name");
    task.prompt_template = f.string("template", task.prompt_template);
    task.shot_template = f.string("shot_template", task.shot_template);
    task.extractor = f.string("extractor");
    try {
        std::regex check(task.extractor);
    } catch (const std::regex_error &) {
        config_error("field '" + f.path("extractor") + "' is not a valid regular expression");
    }
    if (f.has("shot_inputs") || f.has("shot_answers")) {
        task.shots = zip_items(f, "shot_inputs", "shot_answers");
    }
    task.n_shot = f.count("n_shot", task.shots.size());
    if (task.n_shot > task.shots.size()) {
        config_error("field '" + f.path("n_shot") + "' exceeds the number of shots");
    }
    if (f.has("items_file")) {
        task.items = items_from_file(resolve(base, f.string("items_file")));
    } else if (f.has("inputs")) {
        task.items = zip_items(f, "inputs", "answers");
    } else {
        config_error("missing field '" + f.path("inputs") + "' (or '" + f.path("items_file") + "')");
    }
    return task;
}

std::string file_stem(const std::string &task, const std::string &mode) {
    std::string out = task + "." + mode;
    for (char &c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_' && c != '+') {
            c = '_';
        }
    }
    return out;
}

void write_file(const fs::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    }
    out << content;
}

struct ItemRun {
    ItemLog log;
    std::vector<TraceEvent> trace;
};

} // namespace

std::string RunMode::name() const {
    return fusion ? std::string(fusion_mode_name(*fusion)) : "single:" + single_model;
}

RunMode RunMode::parse(std::string_view text) {
    RunMode mode;
    constexpr std::string_view prefix = "single:";
    if (text.substr(0, prefix.size()) == prefix) {
        mode.single_model = std::string(text.substr(prefix.size()));
        if (mode.single_model.empty()) {
            config_error("mode 'single:' needs a model id");
        }
        return mode;
    }
    mode.fusion = fusion_mode_from_name(text);
    return mode;
}

HarnessConfig parse_config(std::string_view toml_text, const fs::path &base_dir) {
    const json root = parse_toml(toml_text);
    const Fields top(root, "");
    HarnessConfig config;

    if (!top.has("backend") || !root["backend"].is_array() || root["backend"].empty()) {
        config_error("missing field 'backend' (at least one [[backend]] table)");
    }
    for (std::size_t i = 0; i < root["backend"].size(); ++i) {
        config.backends.push_back(parse_backend(root["backend"][i], i, base_dir));
        for (std::size_t j = 0; j < i; ++j) {
            if (config.backends[j].id == config.backends[i].id) {
                config_error("duplicate backend id '" + config.backends[i].id + "'");
            }
        }
    }

    config.fusion = parse_fusion(top.has("fusion") ? root["fusion"] : json::object());
    config.seed = top.count("seed", 0);

    const json eval = top.has("eval") ? root["eval"] : json::object();
    const Fields e(eval, "eval");
    if (e.has("modes")) {
        for (const auto &name : e.strings("modes")) {
            config.modes.push_back(RunMode::parse(name));
        }
    } else {
        config.modes.push_back(RunMode{config.fusion.mode, {}});
    }
    for (const auto &mode : config.modes) {
        if (!mode.fusion &&
            std::none_of(config.backends.begin(), config.backends.end(),
                         [&](const BackendSpec &b) { return b.id == mode.single_model; })) {
            config_error("mode '" + mode.name() + "' names an unknown backend");
        }
    }
    config.output_dir = resolve(base_dir, e.string("output_dir", "textfuse-out"));
    config.parallel_items = e.flag("parallel_items", false);

    if (top.has("task")) {
        if (!root["task"].is_array()) {
            config_error("'task' must be declared with [[task]]");
        }
        for (std::size_t i = 0; i < root["task"].size(); ++i) {
            config.tasks.push_back(parse_task(root["task"][i], i, base_dir));
        }
    }
    return config;
}

HarnessConfig load_config(const fs::path &path) {
    return parse_config(read_file(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::vector<BackendPtr> build_backends(const HarnessConfig &config) {
    std::map<fs::path, TokenizerPtr> tokenizers;
    std::vector<BackendPtr> out;
    const CodecWindow window(config.fusion.codec_window_k);
    for (const auto &spec : config.backends) {
        auto &tokenizer = tokenizers[spec.tokenizer];
        if (!tokenizer) {
            tokenizer = load_tokenizer(spec.tokenizer);
        }
        if (spec.kind == "ngram") {
            std::vector<std::string> lines = read_lines(spec.corpus);
            if (spec.train_fraction < 1.0) {
                std::mt19937_64 rng(config.seed);
                std::shuffle(lines.begin(), lines.end(), rng);
                const auto keep = static_cast<std::size_t>(std::ceil(spec.train_fraction * lines.size()));
                lines.resize(std::min(lines.size(), keep));
            }
            out.push_back(std::make_shared<NgramBackend>(spec.id, tokenizer, lines, NgramOptions{spec.lambda, window}));
        } else if (spec.kind == "scripted") {
            out.push_back(
                std::make_shared<ScriptedBackend>(spec.id, tokenizer, script_from_json(read_file(spec.script)), window));
        } else {
            out.push_back(std::make_shared<RemoteBackend>(spec.id, tokenizer, spec.endpoint));
        }
    }
    return out;
}

std::string render_prompt(const TaskSpec &task, std::string_view input) {
    std::string shots;
    for (std::size_t i = 0; i < task.n_shot && i < task.shots.size(); ++i) {
        std::string shot = task.shot_template;
        replace_all(shot, "{input}", task.shots[i].input);
        replace_all(shot, "{answer}", task.shots[i].answer);
        shots += shot;
    }
    std::string prompt = task.prompt_template;
    // {input} first so that an input containing "{shots}" is left alone.
    replace_all(prompt, "{input}", input);
    replace_all(prompt, "{shots}", shots);
    return prompt;
}

std::optional<std::string> extract_answer(std::string_view generation, std::string_view pattern) {
    std::regex re;
    try {
        re.assign(std::string(pattern));
    } catch (const std::regex_error &e) {
        throw Error(ErrorCode::InvalidArgument, "bad extractor '" + std::string(pattern) + "': " + e.what());
    }
    const std::string text(generation);
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        const std::smatch &m = *it;
        last = m.size() > 1 && m[1].matched ? m[1].str() : m[0].str();
    }
    return last;
}

std::optional<std::string> extract_answer(std::string_view generation, const TaskSpec &task) {
    return extract_answer(generation, task.extractor);
}

RunReport run_eval(const HarnessConfig &config, std::span<const BackendPtr> backends, bool write_files) {
    if (backends.empty()) {
        config_error("no backends");
    }
    const fs::path logs_dir = config.output_dir / "logs";
    const fs::path traces_dir = config.output_dir / "traces";
    if (write_files) {
        fs::create_directories(logs_dir);
        fs::create_directories(traces_dir);
    }

    RunReport report;
    for (const auto &task : config.tasks) {
        for (const auto &mode : config.modes) {
            const Backend *single = nullptr;
            if (!mode.fusion) {
                for (const auto &b : backends) {
                    if (b->model_id() == mode.single_model) {
                        single = b.get();
                    }
                }
                if (!single) {
                    config_error("mode '" + mode.name() + "' names an unknown backend");
                }
            }
            FusionConfig fusion = config.fusion;
            if (mode.fusion) {
                fusion.mode = *mode.fusion;
            }

            auto run_item = [&](std::size_t i) {
                ItemRun run;
                const TaskItem &item = task.items[i];
                run.log.index = i;
                run.log.input = item.input;
                run.log.gold = item.answer;
                const std::string prompt = render_prompt(task, item.input);
                if (single) {
                    run.log.generation = greedy_decode(prompt, *single, fusion).text;
                } else {
                    FusionResult result = fuse(prompt, backends, fusion);
                    run.log.generation = std::move(result.chosen_text);
                    run.trace = std::move(result.trace);
                }
                run.log.answer = extract_answer(run.log.generation, task);
                run.log.correct = run.log.answer && trim(*run.log.answer) == trim(item.answer);
                return run;
            };

            std::vector<ItemRun> runs(task.items.size());
            if (config.parallel_items) {
                std::vector<std::future<ItemRun>> futures;
                for (std::size_t i = 0; i < task.items.size(); ++i) {
                    futures.push_back(std::async(std::launch::async, run_item, i));
                }
                for (std::size_t i = 0; i < futures.size(); ++i) {
                    runs[i] = futures[i].get();
                }
            } else {
                for (std::size_t i = 0; i < task.items.size(); ++i) {
                    runs[i] = run_item(i);
                }
            }

            CellReport cell;
            cell.task = task.name;
            cell.mode = mode.name();
            cell.total = runs.size();
            std::string log_text;
            std::string trace_text;
            for (const auto &run : runs) {
                cell.correct += run.log.correct ? 1 : 0;
                nlohmann::ordered_json line;
                line["index"] = run.log.index;
                line["input"] = run.log.input;
                line["gold"] = run.log.gold;
                line["generation"] = run.log.generation;
                line["answer"] = run.log.answer ? nlohmann::ordered_json(*run.log.answer) : nullptr;
                line["correct"] = run.log.correct;
                log_text += line.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
                for (const auto &event : run.trace) {
                    trace_text += "{\"item\":" + std::to_string(run.log.index) + "," +
                                  trace_event_json(event).substr(1) + "\n";
                }
            }
            cell.accuracy = cell.total == 0 ? 0.0 : static_cast<double>(cell.correct) / static_cast<double>(cell.total);
            const std::string stem = file_stem(task.name, cell.mode);
            cell.log_path = fs::path("logs") / (stem + ".jsonl");
            if (mode.fusion) {
                cell.trace_path = fs::path("traces") / (stem + ".jsonl");
            }
            if (write_files) {
                write_file(config.output_dir / cell.log_path, log_text);
                if (mode.fusion) {
                    write_file(config.output_dir / cell.trace_path, trace_text);
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }
    if (write_files) {
        write_file(config.output_dir / "report.json", report_json(report));
    }
    return report;
}

std::string report_json(const RunReport &report) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto &cell : report.cells) {
        nlohmann::ordered_json c;
        c["task"] = cell.task;
        c["mode"] = cell.mode;
        c["correct"] = cell.correct;
        c["total"] = cell.total;
        c["accuracy"] = cell.accuracy;
        c["log"] = cell.log_path.generic_string();
        c["trace"] = cell.trace_path.empty() ? nlohmann::ordered_json(nullptr)
                                             : nlohmann::ordered_json(cell.trace_path.generic_string());
        cells.push_back(std::move(c));
    }
    nlohmann::ordered_json root;
    root["cells"] = std::move(cells);
    return root.dump(2) + "\n";
}

} // namespace textfuse

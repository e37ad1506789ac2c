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
#include "textfuse/harness.hpp"
#include "textfuse/ngram.hpp"
#include "textfuse/remote.hpp"
#include "textfuse/scoring.hpp"
#include "textfuse/scripted.hpp"
#include "textfuse/tokenizer.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace textfuse;

namespace {

// shared_ptr<const T> cannot be a pybind11 holder, so handles wrap them.
struct PyTokenizer {
    TokenizerPtr ptr;
};

struct PyBackend {
    BackendPtr ptr;
};

std::vector<BackendPtr> unwrap(const std::vector<PyBackend> &backends) {
    std::vector<BackendPtr> out;
    for (const auto &b : backends) {
        out.push_back(b.ptr);
    }
    return out;
}

std::vector<PyBackend> wrap(const std::vector<BackendPtr> &backends) {
    std::vector<PyBackend> out;
    for (const auto &b : backends) {
        out.push_back({b});
    }
    return out;
}

std::string trace_jsonl(const FusionResult &result) {
    std::ostringstream out;
    write_trace_jsonl(out, result);
    return out.str();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Training-free fusion of language models with different tokenizers";

    static PyObject *error_type = PyErr_NewException("textfuse.TextfuseError", PyExc_RuntimeError, nullptr);
    m.attr("TextfuseError") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error &e) {
            py::object value = py::reinterpret_steal<py::object>(
                PyObject_CallFunction(error_type, "s", e.what()));
            if (value) {
                value.attr("code") = std::string(error_code_name(e.code()));
                PyErr_SetObject(error_type, value.ptr());
            }
        }
    });

    py::enum_<SegmentMode>(m, "SegmentMode")
        .value("SHORTEST", SegmentMode::Shortest)
        .value("ALIGNED", SegmentMode::Aligned);
    py::enum_<FusionMode>(m, "FusionMode")
        .value("COOL", FusionMode::Cool)
        .value("RERANK", FusionMode::Rerank)
        .value("COOL_PLUS_R", FusionMode::CoolPlusRerank);

    py::class_<PyTokenizer>(m, "Tokenizer")
        .def_property_readonly("name", [](const PyTokenizer &t) { return t.ptr->name(); })
        .def_property_readonly("category",
                               [](const PyTokenizer &t) { return std::string(category_name(t.ptr->category())); })
        .def_property_readonly("vocab_size", [](const PyTokenizer &t) { return t.ptr->vocab_size(); })
        .def_property_readonly("eos_id", [](const PyTokenizer &t) { return t.ptr->eos_id(); })
        .def("encode", [](const PyTokenizer &t, const std::string &text) { return t.ptr->encode(text); })
        .def("decode", [](const PyTokenizer &t, const TokenSeq &tokens) { return t.ptr->decode(tokens); },
             "Text iff the tokens are the canonical encoding of it, else None.")
        .def("decode_raw", [](const PyTokenizer &t, const TokenSeq &tokens) { return t.ptr->decode_raw(tokens); });

    m.def("load_tokenizer", [](const std::filesystem::path &path) { return PyTokenizer{load_tokenizer(path)}; });
    m.def("vocab_overlap",
          [](const PyTokenizer &a, const PyTokenizer &b) { return vocab_overlap(*a.ptr, *b.ptr); });

    m.def(
        "perplexity", [](const std::vector<double> &nlls) { return perplexity(nlls); }, py::arg("nll_per_token"));
    m.def(
        "average_perplexity", [](const std::vector<double> &ppls) { return average_perplexity(ppls); },
        py::arg("per_model_ppl"));

    py::class_<FusionConfig>(m, "FusionConfig")
        .def(py::init<>())
        .def_readwrite("segment_mode", &FusionConfig::segment_mode)
        .def_readwrite("mode", &FusionConfig::mode)
        .def_readwrite("max_iterations", &FusionConfig::max_iterations)
        .def_readwrite("max_new_chars", &FusionConfig::max_new_chars)
        .def_readwrite("stop_strings", &FusionConfig::stop_strings)
        .def_readwrite("segment_token_cap", &FusionConfig::segment_token_cap)
        .def_readwrite("codec_window_k", &FusionConfig::codec_window_k)
        .def_readwrite("parallel", &FusionConfig::parallel)
        .def("validate", &FusionConfig::validate);

    py::class_<PyBackend>(m, "Backend")
        .def_property_readonly("model_id", [](const PyBackend &b) { return b.ptr->model_id(); })
        .def_property_readonly("tokenizer", [](const PyBackend &b) { return PyTokenizer{b.ptr->descriptor().tokenizer}; });

    m.def(
        "ngram_backend",
        [](const std::string &id, const PyTokenizer &t, const std::vector<std::string> &lines, double lambda) {
            NgramOptions options;
            options.lambda = lambda;
            return PyBackend{std::make_shared<NgramBackend>(id, t.ptr, lines, options)};
        },
        py::arg("model_id"), py::arg("tokenizer"), py::arg("corpus_lines"), py::arg("lam") = 0.9);
    m.def(
        "scripted_backend",
        [](const std::string &id, const PyTokenizer &t, const std::string &script_json) {
            return PyBackend{std::make_shared<ScriptedBackend>(id, t.ptr, script_from_json(script_json))};
        },
        py::arg("model_id"), py::arg("tokenizer"), py::arg("script_json"));
    m.def(
        "remote_backend",
        [](const std::string &id, const PyTokenizer &t, const std::string &endpoint, int retries, int timeout_ms) {
            RemoteOptions options;
            options.retries = retries;
            options.timeout = std::chrono::milliseconds(timeout_ms);
            return PyBackend{std::make_shared<RemoteBackend>(id, t.ptr, endpoint, options)};
        },
        py::arg("model_id"), py::arg("tokenizer"), py::arg("endpoint"), py::arg("retries") = 2,
        py::arg("timeout_ms") = 10000);

    py::class_<FusionResult>(m, "FusionResult")
        .def_readonly("joint_text", &FusionResult::joint_text)
        .def_readonly("chosen_text", &FusionResult::chosen_text)
        .def_readonly("chosen_source", &FusionResult::chosen_source)
        .def_readonly("individual_texts", &FusionResult::individual_texts)
        .def_property_readonly("stop_reason",
                               [](const FusionResult &r) { return std::string(stop_reason_name(r.stop_reason)); })
        .def_property_readonly("iterations", [](const FusionResult &r) { return r.trace.size(); })
        .def("trace_jsonl", &trace_jsonl);

    m.def(
        "fuse",
        [](const std::string &prompt, const std::vector<PyBackend> &backends, const FusionConfig &config) {
            const auto raw = unwrap(backends);
            py::gil_scoped_release release;
            return fuse(prompt, raw, config);
        },
        py::arg("prompt"), py::arg("backends"), py::arg("config") = FusionConfig{});
    m.def(
        "greedy_decode",
        [](const std::string &prompt, const PyBackend &backend, const FusionConfig &config) {
            py::gil_scoped_release release;
            const GreedyResult r = greedy_decode(prompt, *backend.ptr, config);
            return std::make_pair(r.text, std::string(stop_reason_name(r.stop_reason)));
        },
        py::arg("prompt"), py::arg("backend"), py::arg("config") = FusionConfig{});

    py::class_<HarnessConfig>(m, "HarnessConfig")
        .def_readwrite("fusion", &HarnessConfig::fusion)
        .def_readwrite("output_dir", &HarnessConfig::output_dir)
        .def_readwrite("parallel_items", &HarnessConfig::parallel_items)
        .def_readwrite("seed", &HarnessConfig::seed)
        .def_property_readonly("modes",
                               [](const HarnessConfig &c) {
                                   std::vector<std::string> out;
                                   for (const auto &mode : c.modes) {
                                       out.push_back(mode.name());
                                   }
                                   return out;
                               })
        .def_property_readonly("task_names", [](const HarnessConfig &c) {
            std::vector<std::string> out;
            for (const auto &task : c.tasks) {
                out.push_back(task.name);
            }
            return out;
        });
    m.def("load_config", &load_config, py::arg("path"));
    m.def("build_backends", [](const HarnessConfig &config) { return wrap(build_backends(config)); });
    m.def(
        "run_eval",
        [](const HarnessConfig &config, const std::vector<PyBackend> &backends, bool write_files) {
            const auto raw = unwrap(backends);
            py::gil_scoped_release release;
            return report_json(run_eval(config, raw, write_files));
        },
        py::arg("config"), py::arg("backends"), py::arg("write_files") = true,
        "Runs every task under every mode; returns the report as JSON text.");
    m.def(
        "extract_answer",
        [](const std::string &generation, const std::string &pattern) { return extract_answer(generation, pattern); },
        py::arg("generation"), py::arg("pattern"));

    py::class_<ProtocolServer>(m, "ProtocolServer")
        .def(py::init([](const PyBackend &backend) { return std::make_unique<ProtocolServer>(backend.ptr); }))
        .def("bind", &ProtocolServer::bind, py::arg("host") = "127.0.0.1", py::arg("port") = 0)
        .def("start", &ProtocolServer::start_background)
        .def("stop", &ProtocolServer::stop, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("session_count", &ProtocolServer::session_count);
}

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

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace textfuse {

// JSON over HTTP, natural-log NLLs:
//   POST   /v1/sessions             {"prompt": str}  -> {"session_id": str}
//   POST   /v1/sessions/{id}/fork   {}               -> {"session_id": str}
//   POST   /v1/sessions/{id}/next   {"n": int}       -> {"tokens": [int], "nlls": [float],
//                                                        "texts_incremental": str, "eos": bool}
//   POST   /v1/sessions/{id}/score  {"text": str}    -> {"nll_sum": float, "token_count": int}
//   POST   /v1/sessions/{id}/append {"text": str}    -> {"ok": true}
//   DELETE /v1/sessions/{id}                         -> {"ok": true}
//   GET    /v1/model                                 -> {"model_id": str, "tokenizer_category": str,
//                                                        "vocab_size": int}
// Failures answer 4xx with {"error": code-string}.

struct RemoteOptions {
    int retries = 2; // extra attempts after the first failure
    std::chrono::milliseconds timeout{10000};
};

struct ModelInfo {
    std::string model_id;
    std::string tokenizer_category;
    std::size_t vocab_size = 0;
};

class RemoteClient;

// Backend served by another process. The tokenizer is loaded locally because
// segmentation and alignment need encode/decode on the engine side.
class RemoteBackend final : public Backend {
public:
    RemoteBackend(std::string model_id, TokenizerPtr tokenizer, std::string endpoint, RemoteOptions options = {});

    SessionPtr open_session(std::string_view prompt) const override;
    ModelInfo model_info() const;

private:
    std::shared_ptr<const RemoteClient> m_client;
};

// Serves one backend over the wire protocol.
class ProtocolServer {
public:
    explicit ProtocolServer(BackendPtr backend);
    ~ProtocolServer();

    ProtocolServer(const ProtocolServer &) = delete;
    ProtocolServer &operator=(const ProtocolServer &) = delete;

    // Binds and returns the port; port 0 picks a free one.
    int bind(const std::string &host, int port);
    void listen();           // blocks until stop()
    void start_background(); // listen() on an owned thread
    void stop();

    std::size_t session_count() const;

private:
    struct Entry {
        std::mutex mutex; // serializes operations on one session
        SessionPtr session;
    };

    std::shared_ptr<Entry> find(const std::string &id) const;
    std::string insert(SessionPtr session);
    void install_routes();

    BackendPtr m_backend;
    std::unique_ptr<httplib::Server> m_server;
    std::thread m_thread;
    mutable std::mutex m_table_mutex;
    std::map<std::string, std::shared_ptr<Entry>> m_sessions;
};

} // namespace textfuse

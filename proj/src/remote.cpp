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

#include "textfuse/remote.hpp"

#include "textfuse/error.hpp"

#include <httplib.h>
#include <json.hpp>

namespace textfuse {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSession:
        return 404;
    case ErrorCode::SessionFinished:
        return 409;
    case ErrorCode::EncodingFailure:
    case ErrorCode::WindowMismatch:
    case ErrorCode::EmptySegment:
        return 422;
    default:
        return 400;
    }
}

void reply(httplib::Response &res, int status, const json &body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response &res, ErrorCode code) {
    reply(res, status_for(code), json{{"error", std::string(error_code_name(code))}});
}

} // namespace

// Transport shared by a backend and all of its sessions.
class RemoteClient {
public:
    RemoteClient(std::string endpoint, RemoteOptions options)
        : m_endpoint(std::move(endpoint)), m_options(options) {
        if (m_options.retries < 0) {
            throw Error(ErrorCode::ConfigError, "retries must be non-negative");
        }
    }

    const std::string &endpoint() const { return m_endpoint; }

    // Issues the request, retrying transport failures and 5xx replies. A 4xx
    // reply becomes an Error with the reported code. POST retries are not
    // idempotent: a lost reply to next or append can advance the session twice.
    json call(const std::string &method, const std::string &path, const json &body = json::object(),
              int retries = -1) const {
        if (retries < 0) {
            retries = m_options.retries;
        }
        std::string last_failure;
        for (int attempt = 0; attempt <= retries; ++attempt) {
            httplib::Client client(m_endpoint);
            const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(m_options.timeout);
            const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(m_options.timeout - seconds);
            client.set_connection_timeout(seconds.count(), micros.count());
            client.set_read_timeout(seconds.count(), micros.count());
            client.set_write_timeout(seconds.count(), micros.count());

            httplib::Result res;
            if (method == "GET") {
                res = client.Get(path);
            } else if (method == "DELETE") {
                res = client.Delete(path);
            } else {
                res = client.Post(path, body.dump(), "application/json");
            }
            if (!res) {
                last_failure = httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_failure = "HTTP " + std::to_string(res->status);
                continue;
            }
            json parsed = json::parse(res->body, nullptr, false);
            if (res->status >= 400) {
                ErrorCode code = ErrorCode::BackendUnavailable;
                if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
                    code = error_code_from_name(parsed["error"].get<std::string>());
                }
                throw Error(code, method + " " + path + " answered HTTP " + std::to_string(res->status));
            }
            if (parsed.is_discarded()) {
                last_failure = "malformed JSON reply";
                continue;
            }
            return parsed;
        }
        throw Error(ErrorCode::BackendUnavailable,
                    method + " " + m_endpoint + path + " failed after " + std::to_string(retries + 1) +
                        " attempts: " + last_failure);
    }

private:
    std::string m_endpoint;
    RemoteOptions m_options;
};

namespace {

class RemoteSession final : public Session {
public:
    RemoteSession(std::shared_ptr<const RemoteClient> client, std::string model_id, TokenizerPtr tokenizer,
                  std::string session_id, std::string context)
        : m_client(std::move(client)), m_model_id(std::move(model_id)), m_tokenizer(std::move(tokenizer)),
          m_session_id(std::move(session_id)), m_text(std::move(context)) {
        retokenize();
    }

    ~RemoteSession() override {
        try {
            m_client->call("DELETE", path(""), json::object(), 0);
        } catch (...) {
        }
    }

    const std::string &session_id() const override { return m_session_id; }
    const std::string &model_id() const override { return m_model_id; }
    bool finished() const override { return m_finished; }
    TokenSeq context_tokens() const override { return m_tokens; }
    std::string context_text() const override { return m_text; }

    TokenStep next_token() override {
        if (m_finished) {
            throw Error(ErrorCode::SessionFinished, "session " + m_session_id + " already produced end-of-sequence");
        }
        const json reply = m_client->call("POST", path("/next"), json{{"n", 1}});
        const auto &tokens = reply.at("tokens");
        const auto &nlls = reply.at("nlls");
        TokenStep step;
        if (reply.at("eos").get<bool>()) {
            m_finished = true;
            step.eos = true;
            step.id = m_tokenizer->eos_id().value_or(-1);
            step.nll = nlls.empty() ? 0.0 : nlls.back().get<double>();
            return step;
        }
        if (tokens.size() != 1 || nlls.size() != 1) {
            throw Error(ErrorCode::BackendUnavailable, "next returned " + std::to_string(tokens.size()) + " tokens");
        }
        step.id = tokens[0].get<TokenId>();
        step.nll = nlls[0].get<double>();
        m_tokens.push_back(step.id);
        m_text += reply.at("texts_incremental").get<std::string>();
        return step;
    }

    SessionPtr fork() const override {
        const json reply = m_client->call("POST", path("/fork"));
        auto copy = std::make_unique<RemoteSession>(m_client, m_model_id, m_tokenizer,
                                                    reply.at("session_id").get<std::string>(), m_text);
        copy->m_tokens = m_tokens;
        copy->m_finished = m_finished;
        return copy;
    }

    TextScore score_text(std::string_view text) const override {
        if (text.empty()) {
            throw Error(ErrorCode::EmptySegment, "cannot score empty text");
        }
        const json reply = m_client->call("POST", path("/score"), json{{"text", std::string(text)}});
        return {reply.at("nll_sum").get<double>(), reply.at("token_count").get<std::size_t>()};
    }

    void append_text(std::string_view text) override {
        if (m_finished) {
            throw Error(ErrorCode::SessionFinished, "session " + m_session_id + " already produced end-of-sequence");
        }
        if (text.empty()) {
            return;
        }
        m_client->call("POST", path("/append"), json{{"text", std::string(text)}});
        m_text += text;
        retokenize();
    }

private:
    std::string path(const std::string &suffix) const { return "/v1/sessions/" + m_session_id + suffix; }

    // Client-side view of the context tokens; the server holds the real ones.
    void retokenize() {
        try {
            m_tokens = m_tokenizer->encode(m_text);
        } catch (const Error &) {
            m_tokens.clear();
        }
    }

    std::shared_ptr<const RemoteClient> m_client;
    std::string m_model_id;
    TokenizerPtr m_tokenizer;
    std::string m_session_id;
    std::string m_text;
    TokenSeq m_tokens;
    bool m_finished = false;
};

} // namespace

RemoteBackend::RemoteBackend(std::string model_id, TokenizerPtr tokenizer, std::string endpoint,
                             RemoteOptions options)
    : Backend({std::move(model_id), std::move(tokenizer), BackendKind::Remote}),
      m_client(std::make_shared<RemoteClient>(std::move(endpoint), options)) {}

SessionPtr RemoteBackend::open_session(std::string_view prompt) const {
    const json reply = m_client->call("POST", "/v1/sessions", json{{"prompt", std::string(prompt)}});
    return std::make_unique<RemoteSession>(m_client, model_id(), descriptor().tokenizer,
                                           reply.at("session_id").get<std::string>(), std::string(prompt));
}

ModelInfo RemoteBackend::model_info() const {
    const json reply = m_client->call("GET", "/v1/model");
    return {reply.at("model_id").get<std::string>(), reply.at("tokenizer_category").get<std::string>(),
            reply.at("vocab_size").get<std::size_t>()};
}

ProtocolServer::ProtocolServer(BackendPtr backend)
    : m_backend(std::move(backend)), m_server(std::make_unique<httplib::Server>()) {
    if (!m_backend) {
        throw Error(ErrorCode::ConfigError, "protocol server needs a backend");
    }
    install_routes();
}

ProtocolServer::~ProtocolServer() { stop(); }

int ProtocolServer::bind(const std::string &host, int port) {
    const int bound = port == 0 ? m_server->bind_to_any_port(host) : (m_server->bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw Error(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void ProtocolServer::listen() { m_server->listen_after_bind(); }

void ProtocolServer::start_background() {
    m_thread = std::thread([this] { listen(); });
    m_server->wait_until_ready();
}

void ProtocolServer::stop() {
    m_server->stop();
    if (m_thread.joinable()) {
        m_thread.join();
    }
}

std::size_t ProtocolServer::session_count() const {
    std::lock_guard lock(m_table_mutex);
    return m_sessions.size();
}

std::shared_ptr<ProtocolServer::Entry> ProtocolServer::find(const std::string &id) const {
    std::lock_guard lock(m_table_mutex);
    auto it = m_sessions.find(id);
    if (it == m_sessions.end()) {
        throw Error(ErrorCode::UnknownSession, "no session " + id);
    }
    return it->second;
}

std::string ProtocolServer::insert(SessionPtr session) {
    auto entry = std::make_shared<Entry>();
    std::string id = session->session_id();
    entry->session = std::move(session);
    std::lock_guard lock(m_table_mutex);
    m_sessions[id] = std::move(entry);
    return id;
}

void ProtocolServer::install_routes() {
    // Wraps a handler with JSON parsing and error mapping.
    auto guarded = [](auto handler) {
        return [handler](const httplib::Request &req, httplib::Response &res) {
            try {
                json body = req.body.empty() ? json::object() : json::parse(req.body);
                if (!body.is_object()) {
                    reply_error(res, ErrorCode::InvalidArgument);
                    return;
                }
                reply(res, 200, handler(req, body));
            } catch (const Error &e) {
                reply_error(res, e.code());
            } catch (const json::exception &) {
                reply_error(res, ErrorCode::InvalidArgument);
            } catch (const std::exception &e) {
                reply(res, 500, json{{"error", "Internal"}, {"message", e.what()}});
            }
        };
    };

    m_server->Post("/v1/sessions", guarded([this](const httplib::Request &, const json &body) {
                       const std::string prompt = body.at("prompt").get<std::string>();
                       return json{{"session_id", insert(m_backend->open_session(prompt))}};
                   }));

    m_server->Post("/v1/sessions/:id/fork", guarded([this](const httplib::Request &req, const json &) {
                       auto entry = find(req.path_params.at("id"));
                       SessionPtr copy;
                       {
                           std::lock_guard lock(entry->mutex);
                           copy = entry->session->fork();
                       }
                       return json{{"session_id", insert(std::move(copy))}};
                   }));

    m_server->Post("/v1/sessions/:id/next", guarded([this](const httplib::Request &req, const json &body) {
                       const long n = body.value("n", 1L);
                       if (n < 1) {
                           throw Error(ErrorCode::InvalidArgument, "n must be positive");
                       }
                       auto entry = find(req.path_params.at("id"));
                       std::lock_guard lock(entry->mutex);
                       Session &session = *entry->session;
                       if (session.finished()) {
                           throw Error(ErrorCode::SessionFinished, "session already finished");
                       }
                       const std::string before = session.context_text();
                       json tokens = json::array();
                       json nlls = json::array();
                       bool eos = false;
                       for (long i = 0; i < n && !eos; ++i) {
                           const TokenStep step = session.next_token();
                           eos = step.eos;
                           if (!eos) {
                               tokens.push_back(step.id);
                           }
                           nlls.push_back(step.nll);
                       }
                       const std::string after = session.context_text();
                       return json{{"tokens", std::move(tokens)},
                                   {"nlls", std::move(nlls)},
                                   {"texts_incremental", after.substr(before.size())},
                                   {"eos", eos}};
                   }));

    m_server->Post("/v1/sessions/:id/score", guarded([this](const httplib::Request &req, const json &body) {
                       const std::string text = body.at("text").get<std::string>();
                       auto entry = find(req.path_params.at("id"));
                       std::lock_guard lock(entry->mutex);
                       const TextScore score = entry->session->score_text(text);
                       return json{{"nll_sum", score.nll_sum}, {"token_count", score.token_count}};
                   }));

    m_server->Post("/v1/sessions/:id/append", guarded([this](const httplib::Request &req, const json &body) {
                       const std::string text = body.at("text").get<std::string>();
                       auto entry = find(req.path_params.at("id"));
                       std::lock_guard lock(entry->mutex);
                       entry->session->append_text(text);
                       return json{{"ok", true}};
                   }));

    m_server->Delete("/v1/sessions/:id", guarded([this](const httplib::Request &req, const json &) {
                         const std::string id = req.path_params.at("id");
                         std::shared_ptr<Entry> entry;
                         {
                             std::lock_guard lock(m_table_mutex);
                             auto it = m_sessions.find(id);
                             if (it == m_sessions.end()) {
                                 throw Error(ErrorCode::UnknownSession, "no session " + id);
                             }
                             entry = std::move(it->second);
                             m_sessions.erase(it);
                         }
                         std::lock_guard lock(entry->mutex); // wait for in-flight work
                         return json{{"ok", true}};
                     }));

    m_server->Get("/v1/model", guarded([this](const httplib::Request &, const json &) {
                      return json{{"model_id", m_backend->model_id()},
                                  {"tokenizer_category", std::string(category_name(m_backend->tokenizer().category()))},
                                  {"vocab_size", m_backend->tokenizer().vocab_size()}};
                  }));
}

} // namespace textfuse

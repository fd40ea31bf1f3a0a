#include "llb/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "llb/error.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

const char* chat_role_name(ChatRole role) {
    switch (role) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

std::string ChatRequest::digest() const {
    json doc;
    doc["model_id"] = model_id;
    doc["temperature"] = temperature;
    doc["seed"] = seed ? json(*seed) : json(nullptr);
    doc["max_output_tokens"] = max_output_tokens;
    doc["messages"] = json::array();
    for (const ChatMessage& m : messages) {
        doc["messages"].push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    }
    return sha256_hex(doc.dump());
}

std::int64_t approx_token_count(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

// --- ScriptedBackend -------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<Entry> entries) {
    for (Entry& e : entries) {
        auto key = std::make_pair(e.scan_id, e.round);
        State state{e, e.fail_times};
        if (!entries_.emplace(std::move(key), std::move(state)).second) {
            throw Error(Errc::DuplicateKey,
                        "script entry (" + e.scan_id + ", " + std::to_string(e.round) + ")");
        }
    }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array())
        throw Error(Errc::ParseError, path.string() + ": expected {entries[]}");

    std::vector<Entry> entries;
    for (const json& item : doc["entries"]) {
        Entry e;
        try {
            e.scan_id = item.at("scan_id").get<std::string>();
            e.round = item.at("round").get<int>();
            e.response = item.at("response").get<std::string>();
        } catch (const json::exception& ex) {
            throw Error(Errc::ParseError,
                        "script entry needs scan_id, round, response: " + std::string(ex.what()));
        }
        if (item.contains("expect_request_digest"))
            e.expect_request_digest = item["expect_request_digest"].get<std::string>();
        e.latency_ms = item.value("latency_ms", 0);
        if (item.contains("prompt_tokens")) e.prompt_tokens = item["prompt_tokens"].get<std::int64_t>();
        if (item.contains("completion_tokens"))
            e.completion_tokens = item["completion_tokens"].get<std::int64_t>();
        e.fail_times = item.value("fail_times", 0);
        entries.push_back(std::move(e));
    }
    return std::make_shared<ScriptedBackend>(std::move(entries));
}

BackendReply ScriptedBackend::send(const ChatRequest& request, const CallKey& key) {
    count_send();
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find({key.scan_id, key.round_index});
    if (it == entries_.end()) {
        throw Error(Errc::ScriptMiss,
                    "no script entry for (" + key.scan_id + ", " +
                        std::to_string(key.round_index) + ")");
    }
    State& state = it->second;
    if (state.failures_left > 0) {
        --state.failures_left;
        throw Error(Errc::TransientBackend, "scripted transient failure for " + key.scan_id);
    }
    if (state.entry.expect_request_digest &&
        *state.entry.expect_request_digest != request.digest()) {
        throw Error(Errc::DigestMismatch,
                    "round " + std::to_string(key.round_index) + " of " + key.scan_id +
                        ": prompt drifted from pinned digest " +
                        *state.entry.expect_request_digest);
    }

    BackendReply reply;
    reply.text = state.entry.response;
    reply.latency_ms = state.entry.latency_ms;
    if (state.entry.prompt_tokens) reply.prompt_tokens = state.entry.prompt_tokens;
    if (state.entry.completion_tokens) reply.completion_tokens = state.entry.completion_tokens;
    return reply;
}

// --- HttpBackend -----------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty())
        throw Error(Errc::InvalidArgument, "http backend needs an endpoint");
}

BackendReply HttpBackend::send(const ChatRequest& request, const CallKey& key) {
    count_send();

    json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    if (request.seed) body["seed"] = *request.seed;
    body["max_tokens"] = request.max_output_tokens;
    body["messages"] = json::array();
    for (const ChatMessage& m : request.messages) {
        body["messages"].push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    }

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* api_key = std::getenv(config_.api_key_env.c_str());
        if (!api_key || !*api_key) {
            throw Error(Errc::AuthFailure,
                        "environment variable " + config_.api_key_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + api_key);
    }

    auto result = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!result) {
        throw Error(Errc::BackendTimeout,
                    config_.endpoint + ": " + httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403)
        throw Error(Errc::AuthFailure, "HTTP " + std::to_string(result->status));
    if (result->status == 429)
        throw Error(Errc::RateLimited, "HTTP 429 from " + config_.endpoint);
    if (result->status >= 500)
        throw Error(Errc::TransientBackend, "HTTP " + std::to_string(result->status));
    if (result->status != 200)
        throw Error(Errc::InvalidArgument,
                    "HTTP " + std::to_string(result->status) + ": " + result->body);

    try {
        json doc = json::parse(result->body);
        BackendReply reply;
        reply.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage")) {
            const json& usage = doc["usage"];
            if (usage.contains("prompt_tokens"))
                reply.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
            if (usage.contains("completion_tokens"))
                reply.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
        }
        return reply;
    } catch (const json::exception& e) {
        throw Error(Errc::SerializationError,
                    std::string("malformed chat-completion response: ") + e.what());
    }
}

// --- Gateway ---------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (options_.max_attempts < 1) options_.max_attempts = 1;
    if (options_.max_in_flight < 1) options_.max_in_flight = 1;
}

ChatExchange Gateway::complete(const ChatRequest& request, const CallKey& key) {
    {
        std::unique_lock<std::mutex> lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
    }
    struct SlotGuard {
        Gateway* gw;
        ~SlotGuard() {
            std::lock_guard<std::mutex> lock(gw->mutex_);
            --gw->in_flight_;
            gw->slot_free_.notify_one();
        }
    } guard{this};

    int backoff_ms = options_.backoff_initial_ms;
    for (int attempt = 1;; ++attempt) {
        auto start = std::chrono::steady_clock::now();
        try {
            BackendReply reply = backend_->send(request, key);
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();

            ChatExchange exchange;
            exchange.request_digest = request.digest();
            exchange.response_text = reply.text;
            exchange.latency_ms = reply.latency_ms.value_or(elapsed);
            exchange.round_index = key.round_index;
            exchange.scan_id = key.scan_id;
            exchange.attempts = attempt;
            std::int64_t prompt_bytes = 0;
            for (const ChatMessage& m : request.messages)
                prompt_bytes += static_cast<std::int64_t>(m.content.size());
            exchange.prompt_tokens = reply.prompt_tokens.value_or((prompt_bytes + 3) / 4);
            exchange.completion_tokens =
                reply.completion_tokens.value_or(approx_token_count(reply.text));

            std::lock_guard<std::mutex> lock(mutex_);
            exchanges_.push_back(exchange);
            return exchange;
        } catch (const Error& e) {
            if (!is_transient(e.code()) || attempt >= options_.max_attempts) throw;
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms = std::min(backoff_ms * 2, options_.backoff_cap_ms);
        }
    }
}

std::vector<ChatExchange> Gateway::exchanges() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return exchanges_;
}

std::size_t Gateway::exchange_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return exchanges_.size();
}

std::size_t Gateway::exchange_count_with_prefix(const std::string& scan_id_prefix) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t count = 0;
    for (const ChatExchange& e : exchanges_) {
        if (e.scan_id.rfind(scan_id_prefix, 0) == 0) ++count;
    }
    return count;
}

}  // namespace llb

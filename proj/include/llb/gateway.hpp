#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace llb {

enum class ChatRole { System, User, Assistant };

const char* chat_role_name(ChatRole role);

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    int max_output_tokens = 4096;

    // Stable hash over the canonical serialization; used for scripted-entry
    // drift pinning and transcript digests.
    std::string digest() const;
};

struct ChatExchange {
    std::string request_digest;
    std::string response_text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
    int round_index = 0;
    std::string scan_id;
    int attempts = 1;
};

// Identifies one conversation round so a scripted backend can key responses.
struct CallKey {
    std::string scan_id;
    int round_index = 0;
};

struct BackendReply {
    std::string text;
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
    // Scripted backends report a pinned latency so replays are byte-stable;
    // live backends leave this unset and the gateway measures wall clock.
    std::optional<std::int64_t> latency_ms;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string kind() const = 0;
    // Throws Error on failure; transient codes get retried by the gateway.
    virtual BackendReply send(const ChatRequest& request, const CallKey& key) = 0;

    // Raw send() invocations, retries included.
    std::int64_t send_count() const { return send_count_.load(); }

protected:
    void count_send() { ++send_count_; }

private:
    std::atomic<std::int64_t> send_count_{0};
};

// Deterministic replay backend keyed by (scan_id, round_index).
class ScriptedBackend : public Backend {
public:
    struct Entry {
        std::string scan_id;
        int round = 0;
        std::string response;
        std::optional<std::string> expect_request_digest;
        std::int64_t latency_ms = 0;
        std::optional<std::int64_t> prompt_tokens;
        std::optional<std::int64_t> completion_tokens;
        int fail_times = 0;  // transient failures served before the response
    };

    explicit ScriptedBackend(std::vector<Entry> entries);

    // Loads a script file (JSON, see docs/formats.md). Throws ParseError /
    // DuplicateKey.
    static std::shared_ptr<ScriptedBackend> load(const std::filesystem::path& path);

    std::string kind() const override { return "scripted"; }
    BackendReply send(const ChatRequest& request, const CallKey& key) override;

private:
    struct State {
        Entry entry;
        int failures_left = 0;
    };
    std::map<std::pair<std::string, int>, State> entries_;
    std::mutex mutex_;
};

struct HttpBackendConfig {
    std::string endpoint;     // e.g. http://localhost:8080
    std::string path = "/v1/chat/completions";
    std::string api_key_env;  // name of the env var holding the key; may be empty
    int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions client. Also covers local model servers
// speaking the same protocol (leave api_key_env empty).
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string kind() const override { return "http"; }
    BackendReply send(const ChatRequest& request, const CallKey& key) override;

private:
    HttpBackendConfig config_;
};

struct GatewayOptions {
    int max_attempts = 3;
    int backoff_initial_ms = 250;
    int backoff_cap_ms = 4000;
    int max_in_flight = 4;
};

// Wraps a backend with bounded exponential-backoff retries, an in-flight
// limit, and per-call telemetry. Shareable across concurrent scans.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

    // Runs one chat completion. Retries transient failures up to
    // options.max_attempts total tries, then rethrows the last error.
    ChatExchange complete(const ChatRequest& request, const CallKey& key);

    Backend& backend() { return *backend_; }
    const GatewayOptions& options() const { return options_; }

    std::vector<ChatExchange> exchanges() const;
    std::size_t exchange_count() const;
    std::size_t exchange_count_with_prefix(const std::string& scan_id_prefix) const;

private:
    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;

    mutable std::mutex mutex_;
    std::vector<ChatExchange> exchanges_;
    int in_flight_ = 0;
    std::condition_variable slot_free_;
};

// Rough byte-length token estimate used when a backend reports no usage.
std::int64_t approx_token_count(std::string_view text);

}  // namespace llb

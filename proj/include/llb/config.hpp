#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "llb/engine.hpp"
#include "llb/gateway.hpp"

namespace llb {

enum class BackendKind { Scripted, OpenAiHttp, LocalHttp };

const char* backend_kind_name(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(const std::string& name);

struct BackendSettings {
    BackendKind kind = BackendKind::Scripted;
    std::filesystem::path script;  // required for Scripted
    std::string endpoint;          // required for the http kinds
    std::string api_path = "/v1/chat/completions";
    // Name of the environment variable holding the API key. The key itself
    // never appears in flags or config values.
    std::string api_key_env;
    int timeout_seconds = 120;
};

// Everything the CLI resolves before dispatching: flags > environment >
// config file > these defaults.
struct CliConfig {
    BackendSettings backend;
    ModelParams model;
    ScanMode mode = ScanMode::Basic;
    EngineLimits limits;
    GatewayOptions gateway;
    std::filesystem::path sanitize_rules;  // empty -> stock rules
    bool sanitize = true;
    std::filesystem::path registry;        // empty -> built-ins only
    std::filesystem::path out_dir = "reports";
    std::filesystem::path summary_cache;   // empty -> <out_dir>/summaries
    IndexScope scope = IndexScope::Extended;

    // Loads a config file (JSON, see docs/formats.md). Relative paths inside
    // the file resolve against the file's directory. Unknown top-level keys
    // are rejected so typos fail loudly. Throws ParseError / IoError.
    static CliConfig load(const std::filesystem::path& path);

    // Path named by LLB_CONFIG, when set and non-empty.
    static std::optional<std::filesystem::path> env_config_path();
};

// Instantiates the configured backend. Throws InvalidArgument on missing
// script/endpoint and whatever ScriptedBackend::load raises.
std::shared_ptr<Backend> make_backend(const BackendSettings& settings);

}  // namespace llb

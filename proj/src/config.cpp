#include "llb/config.hpp"

#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

const char* backend_kind_name(BackendKind kind) {
    switch (kind) {
        case BackendKind::Scripted: return "scripted";
        case BackendKind::OpenAiHttp: return "openai_http";
        case BackendKind::LocalHttp: return "local_http";
    }
    return "scripted";
}

std::optional<BackendKind> parse_backend_kind(const std::string& name) {
    if (name == "scripted") return BackendKind::Scripted;
    if (name == "openai_http") return BackendKind::OpenAiHttp;
    if (name == "local_http") return BackendKind::LocalHttp;
    return std::nullopt;
}

namespace {

std::filesystem::path resolve_against(const std::filesystem::path& base, const std::string& raw) {
    std::filesystem::path p(raw);
    if (p.is_absolute() || raw.empty()) return p;
    return base / p;
}

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!allowed.count(key))
            throw Error(Errc::ParseError, "unknown config key \"" + key + "\" in " + where);
    }
}

}  // namespace

std::optional<std::filesystem::path> CliConfig::env_config_path() {
    const char* value = std::getenv("LLB_CONFIG");
    if (value && *value) return std::filesystem::path(value);
    return std::nullopt;
}

CliConfig CliConfig::load(const std::filesystem::path& path) {
    std::filesystem::path base = path.parent_path();
    CliConfig cfg;
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, "config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(Errc::ParseError, "config must be a JSON object");
    check_keys(doc,
               {"backend", "model", "mode", "limits", "gateway", "sanitize_rules", "sanitize",
                "registry", "out_dir", "summary_cache", "scope"},
               path.string());
    try {
        if (doc.contains("backend")) {
            const json& b = doc["backend"];
            check_keys(b, {"kind", "script", "endpoint", "api_path", "api_key_env",
                           "timeout_seconds"},
                       "backend");
            if (b.contains("kind")) {
                auto kind = parse_backend_kind(b["kind"].get<std::string>());
                if (!kind)
                    throw Error(Errc::ParseError,
                                "unknown backend kind " + b["kind"].dump() +
                                    " (scripted, openai_http, local_http)");
                cfg.backend.kind = *kind;
            }
            if (b.contains("script"))
                cfg.backend.script = resolve_against(base, b["script"].get<std::string>());
            cfg.backend.endpoint = b.value("endpoint", cfg.backend.endpoint);
            cfg.backend.api_path = b.value("api_path", cfg.backend.api_path);
            cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
            cfg.backend.timeout_seconds = b.value("timeout_seconds", cfg.backend.timeout_seconds);
        }
        if (doc.contains("model")) {
            const json& m = doc["model"];
            check_keys(m, {"model_id", "temperature", "seed", "max_output_tokens"}, "model");
            cfg.model.model_id = m.value("model_id", cfg.model.model_id);
            cfg.model.temperature = m.value("temperature", cfg.model.temperature);
            if (m.contains("seed")) {
                if (m["seed"].is_null())
                    cfg.model.seed.reset();
                else
                    cfg.model.seed = m["seed"].get<std::int64_t>();
            }
            cfg.model.max_output_tokens = m.value("max_output_tokens", cfg.model.max_output_tokens);
        }
        if (doc.contains("mode")) {
            auto mode = parse_scan_mode(doc["mode"].get<std::string>());
            if (!mode) throw Error(Errc::ParseError, "unknown mode " + doc["mode"].dump());
            cfg.mode = *mode;
        }
        if (doc.contains("limits")) {
            const json& l = doc["limits"];
            check_keys(l, {"max_rounds", "max_files_per_round", "context_char_budget"}, "limits");
            cfg.limits.max_rounds = l.value("max_rounds", cfg.limits.max_rounds);
            cfg.limits.max_files_per_round =
                l.value("max_files_per_round", cfg.limits.max_files_per_round);
            cfg.limits.context_char_budget =
                l.value("context_char_budget", cfg.limits.context_char_budget);
        }
        if (doc.contains("gateway")) {
            const json& g = doc["gateway"];
            check_keys(g, {"max_attempts", "backoff_initial_ms", "backoff_cap_ms",
                           "max_in_flight"},
                       "gateway");
            cfg.gateway.max_attempts = g.value("max_attempts", cfg.gateway.max_attempts);
            cfg.gateway.backoff_initial_ms =
                g.value("backoff_initial_ms", cfg.gateway.backoff_initial_ms);
            cfg.gateway.backoff_cap_ms = g.value("backoff_cap_ms", cfg.gateway.backoff_cap_ms);
            cfg.gateway.max_in_flight = g.value("max_in_flight", cfg.gateway.max_in_flight);
        }
        if (doc.contains("sanitize_rules"))
            cfg.sanitize_rules = resolve_against(base, doc["sanitize_rules"].get<std::string>());
        cfg.sanitize = doc.value("sanitize", cfg.sanitize);
        if (doc.contains("registry"))
            cfg.registry = resolve_against(base, doc["registry"].get<std::string>());
        if (doc.contains("out_dir"))
            cfg.out_dir = resolve_against(base, doc["out_dir"].get<std::string>());
        if (doc.contains("summary_cache"))
            cfg.summary_cache = resolve_against(base, doc["summary_cache"].get<std::string>());
        if (doc.contains("scope")) {
            std::string scope = doc["scope"].get<std::string>();
            if (scope == "extended") {
                cfg.scope = IndexScope::Extended;
            } else if (scope == "main_source_only") {
                cfg.scope = IndexScope::MainSourceOnly;
            } else {
                throw Error(Errc::ParseError, "unknown scope \"" + scope +
                                                  "\" (extended, main_source_only)");
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, "config " + path.string() + ": " + e.what());
    }
    return cfg;
}

std::shared_ptr<Backend> make_backend(const BackendSettings& settings) {
    switch (settings.kind) {
        case BackendKind::Scripted:
            if (settings.script.empty())
                throw Error(Errc::InvalidArgument,
                            "scripted backend needs a script file (--script)");
            return ScriptedBackend::load(settings.script);
        case BackendKind::OpenAiHttp:
        case BackendKind::LocalHttp: {
            if (settings.endpoint.empty())
                throw Error(Errc::InvalidArgument,
                            "http backend needs an endpoint (--endpoint)");
            HttpBackendConfig config;
            config.endpoint = settings.endpoint;
            config.path = settings.api_path;
            config.api_key_env = settings.api_key_env;
            config.timeout_seconds = settings.timeout_seconds;
            return std::make_shared<HttpBackend>(std::move(config));
        }
    }
    throw Error(Errc::InvalidArgument, "unhandled backend kind");
}

}  // namespace llb

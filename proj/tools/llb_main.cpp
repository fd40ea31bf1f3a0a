#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "llb/bench.hpp"
#include "llb/config.hpp"
#include "llb/corpus.hpp"
#include "llb/engine.hpp"
#include "llb/error.hpp"
#include "llb/gateway.hpp"
#include "llb/registry.hpp"
#include "llb/report.hpp"
#include "llb/sanitize.hpp"
#include "llb/summarize.hpp"
#include "llb/util.hpp"

namespace {

constexpr const char* kVersion = "llb 1.0.0";

// One slot per flag that can override a config value; applied only when the
// flag was actually passed, so precedence stays flags > env > config file >
// defaults.
struct Overrides {
    std::string backend_kind;
    std::string script;
    std::string endpoint;
    std::string api_path;
    std::string api_key_env;
    int timeout_seconds = 0;
    std::string model_id;
    double temperature = 0.0;
    std::int64_t seed = 0;
    int max_output_tokens = 0;
    std::string mode;
    int max_rounds = 0;
    int max_files_per_round = 0;
    std::size_t context_budget = 0;
    int max_attempts = 0;
    int max_in_flight = 0;
    std::string rules;
    bool no_sanitize = false;
    std::string registry;
    std::string out;
    std::string summary_cache;
    std::string scope;
};

void add_common_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--backend", o.backend_kind,
                    "Backend kind: scripted, openai_http, local_http");
    sub->add_option("--script", o.script, "Reply script file for the scripted backend");
    sub->add_option("--endpoint", o.endpoint, "Base URL of an http backend");
    sub->add_option("--api-path", o.api_path, "Chat-completions path on the endpoint");
    sub->add_option("--api-key-env", o.api_key_env,
                    "Name of the environment variable holding the API key");
    sub->add_option("--timeout-seconds", o.timeout_seconds, "Http backend timeout");
    sub->add_option("--model", o.model_id, "Model id sent to the backend");
    sub->add_option("--temperature", o.temperature, "Sampling temperature");
    sub->add_option("--seed", o.seed, "Sampling seed");
    sub->add_option("--max-output-tokens", o.max_output_tokens, "Reply token cap");
    sub->add_option("--mode", o.mode,
                    "Scan mode: basic, summary_hint, file_request, summary_file_request");
    sub->add_option("--max-rounds", o.max_rounds, "Conversation round cap per scan");
    sub->add_option("--max-files-per-round", o.max_files_per_round,
                    "Files served per request round");
    sub->add_option("--context-budget", o.context_budget,
                    "Character budget per prompt message");
    sub->add_option("--max-attempts", o.max_attempts, "Tries per chat call");
    sub->add_option("--max-in-flight", o.max_in_flight, "Concurrent chat calls");
    sub->add_option("--rules", o.rules, "Token-replacement rules file");
    sub->add_flag("--no-sanitize", o.no_sanitize,
                  "Serve file content verbatim, without token replacement");
    sub->add_option("--registry", o.registry, "Scanner registry file merged over the built-ins");
    sub->add_option("--out", o.out, "Output directory for report bundles");
    sub->add_option("--summary-cache", o.summary_cache, "Directory for the file-summary cache");
    sub->add_option("--scope", o.scope, "Index scope: extended, main_source_only");
}

void apply_overrides(CLI::App* sub, const Overrides& o, llb::CliConfig& cfg) {
    using llb::Errc;
    using llb::Error;
    if (sub->count("--backend")) {
        auto kind = llb::parse_backend_kind(o.backend_kind);
        if (!kind)
            throw Error(Errc::InvalidArgument,
                        "unknown backend kind \"" + o.backend_kind +
                            "\" (scripted, openai_http, local_http)");
        cfg.backend.kind = *kind;
    }
    if (sub->count("--script")) cfg.backend.script = o.script;
    if (sub->count("--endpoint")) cfg.backend.endpoint = o.endpoint;
    if (sub->count("--api-path")) cfg.backend.api_path = o.api_path;
    if (sub->count("--api-key-env")) cfg.backend.api_key_env = o.api_key_env;
    if (sub->count("--timeout-seconds")) cfg.backend.timeout_seconds = o.timeout_seconds;
    if (sub->count("--model")) cfg.model.model_id = o.model_id;
    if (sub->count("--temperature")) cfg.model.temperature = o.temperature;
    if (sub->count("--seed")) cfg.model.seed = o.seed;
    if (sub->count("--max-output-tokens")) cfg.model.max_output_tokens = o.max_output_tokens;
    if (sub->count("--mode")) {
        auto mode = llb::parse_scan_mode(o.mode);
        if (!mode)
            throw Error(Errc::InvalidArgument,
                        "unknown mode \"" + o.mode +
                            "\" (basic, summary_hint, file_request, summary_file_request)");
        cfg.mode = *mode;
    }
    if (sub->count("--max-rounds")) cfg.limits.max_rounds = o.max_rounds;
    if (sub->count("--max-files-per-round"))
        cfg.limits.max_files_per_round = o.max_files_per_round;
    if (sub->count("--context-budget")) cfg.limits.context_char_budget = o.context_budget;
    if (sub->count("--max-attempts")) cfg.gateway.max_attempts = o.max_attempts;
    if (sub->count("--max-in-flight")) cfg.gateway.max_in_flight = o.max_in_flight;
    if (sub->count("--rules")) cfg.sanitize_rules = o.rules;
    if (sub->count("--no-sanitize")) cfg.sanitize = false;
    if (sub->count("--registry")) cfg.registry = o.registry;
    if (sub->count("--out")) cfg.out_dir = o.out;
    if (sub->count("--summary-cache")) cfg.summary_cache = o.summary_cache;
    if (sub->count("--scope")) {
        if (o.scope == "extended") {
            cfg.scope = llb::IndexScope::Extended;
        } else if (o.scope == "main_source_only") {
            cfg.scope = llb::IndexScope::MainSourceOnly;
        } else {
            throw Error(Errc::InvalidArgument,
                        "unknown scope \"" + o.scope + "\" (extended, main_source_only)");
        }
    }
}

llb::ScannerRegistry load_registry(const llb::CliConfig& cfg) {
    return cfg.registry.empty() ? llb::ScannerRegistry::builtin()
                                : llb::ScannerRegistry::load(cfg.registry);
}

llb::SanitizeRules load_rules(const llb::CliConfig& cfg) {
    if (!cfg.sanitize) return llb::SanitizeRules::identity();
    if (cfg.sanitize_rules.empty()) return llb::SanitizeRules::defaults();
    return llb::SanitizeRules::load(cfg.sanitize_rules);
}

std::filesystem::path summary_cache_dir(const llb::CliConfig& cfg) {
    return cfg.summary_cache.empty() ? cfg.out_dir / "summaries" : cfg.summary_cache;
}

std::string upper(std::string text) {
    for (char& c : text) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return text;
}

int cmd_scan(const std::string& target, const std::string& set_name, llb::CliConfig& cfg) {
    llb::ScannerRegistry registry = load_registry(cfg);
    llb::ScannerSet set = registry.select(set_name);
    llb::SanitizeRules rules = load_rules(cfg);
    llb::ProjectIndex index = llb::ProjectIndex::build(target, cfg.scope);
    if (index.seed_files().empty())
        std::cerr << "note: no manifest or main activity under " << target
                  << "; scanning without seed files\n";
    llb::SanitizedView view = llb::SanitizedView::build(index, rules);
    llb::Gateway gateway(llb::make_backend(cfg.backend), cfg.gateway);
    llb::SummaryCache cache(summary_cache_dir(cfg));

    int insecure = 0, secure = 0, undecidable = 0;
    for (const llb::ScannerDefinition& def : set.members) {
        if (!def.enabled) continue;
        llb::ScanJob job;
        job.view = &view;
        job.scanner = def;
        job.mode = cfg.mode;
        job.limits = cfg.limits;
        job.model = cfg.model;
        job.summaries = &cache;
        job.app = target;
        llb::ScanResult result = llb::run_scan(job, gateway);
        llb::write_report(result, cfg.out_dir, &view);
        char line[256];
        std::snprintf(line, sizeof(line), "%-28s %-12s rounds=%d findings=%zu\n",
                      def.id.c_str(), upper(llb::verdict_name(result.verdict)).c_str(),
                      result.rounds_used, result.findings.size());
        std::cout << line;
        switch (result.verdict) {
            case llb::Verdict::Insecure: ++insecure; break;
            case llb::Verdict::Secure: ++secure; break;
            case llb::Verdict::Undecidable: ++undecidable; break;
        }
    }
    std::cout << "\nscanners: " << set.members.size() << "  INSECURE: " << insecure
              << "  SECURE: " << secure << "  UNDECIDABLE: " << undecidable << "\n";
    std::cout << "reports: " << cfg.out_dir.string() << "\n";
    if (insecure > 0) return 1;
    if (undecidable > 0) return 2;
    return 0;
}

int cmd_expert(const std::string& report, const std::string& comment, const std::string& author,
               std::optional<int> finding_index, bool rescan, const std::string& target_override,
               bool out_overridden, llb::CliConfig& cfg) {
    llb::ExpertComment expert;
    expert.author = author;
    expert.text = comment;
    expert.finding_index = finding_index;
    llb::ReportBundle bundle = llb::append_expert(report, expert);
    std::cout << "comment appended to " << bundle.machine_report_path.string() << " ("
              << bundle.expert_comments.size() << " total)\n";
    if (!rescan) return 0;

    const llb::ScanResult& prior = bundle.result;
    std::filesystem::path target(target_override.empty() ? prior.app : target_override);
    llb::ScannerRegistry registry = load_registry(cfg);
    llb::ScannerDefinition scanner;
    if (const llb::ScannerDefinition* def = registry.find(prior.scanner_id)) {
        scanner = *def;
    } else {
        scanner.id = prior.scanner_id;
        scanner.display_name = prior.scanner_id;
        scanner.category = "Other";
    }
    llb::SanitizeRules rules = load_rules(cfg);
    llb::ProjectIndex index = llb::ProjectIndex::build(target, cfg.scope);
    llb::SanitizedView view = llb::SanitizedView::build(index, rules);
    llb::Gateway gateway(llb::make_backend(cfg.backend), cfg.gateway);
    llb::SummaryCache cache(summary_cache_dir(cfg));

    // The linked report defaults into the tree the original bundle lives in.
    std::filesystem::path out_dir =
        out_overridden ? cfg.out_dir
                       : bundle.machine_report_path.parent_path().parent_path().parent_path();

    llb::ScanJob job;
    job.view = &view;
    job.scanner = scanner;
    job.mode = prior.mode;
    job.limits = cfg.limits;
    job.model = cfg.model;
    job.summaries = &cache;
    job.app = prior.app;

    llb::ScanResult revised = llb::rescan_with_expert(prior, comment, job, gateway);
    llb::write_report(revised, out_dir, &view);
    std::cout << "re-analysis " << revised.scan_id << ": "
              << upper(llb::verdict_name(prior.verdict)) << " -> "
              << upper(llb::verdict_name(revised.verdict)) << "\n";
    return 0;
}

int cmd_bench(const std::string& corpus_path, const std::string& set_name,
              llb::CliConfig& cfg) {
    llb::CorpusManifest corpus = llb::load_corpus(corpus_path);
    llb::ScannerRegistry registry = load_registry(cfg);
    llb::ScannerSet set = registry.select(set_name);
    llb::Gateway gateway(llb::make_backend(cfg.backend), cfg.gateway);
    llb::SummaryCache cache(summary_cache_dir(cfg));

    llb::BenchJob job;
    job.corpus = std::move(corpus);
    job.scanners = set.members;
    job.mode = cfg.mode;
    job.limits = cfg.limits;
    job.model = cfg.model;
    job.rules = load_rules(cfg);
    job.out_dir = cfg.out_dir;
    job.summaries = &cache;
    job.scope = cfg.scope;

    llb::BenchOutcome outcome = llb::run_bench(job, gateway);
    std::cout << llb::render_matrix_text(job.corpus.name, job.mode, outcome.matrix,
                                         outcome.summary);
    std::cout << "\nartifacts: " << cfg.out_dir.string() << "\n";
    return 0;
}

int cmd_registry(const std::string& registry_file, const std::string& export_path) {
    llb::ScannerRegistry registry = registry_file.empty()
                                        ? llb::ScannerRegistry::builtin()
                                        : llb::ScannerRegistry::load(registry_file);
    if (export_path.empty()) {
        std::cout << registry.to_json_text();
    } else {
        llb::write_file(export_path, registry.to_json_text());
        std::cout << "wrote " << registry.scanners().size() << " scanner definitions to "
                  << export_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"llb: conversational vulnerability scanner for Android project trees"};
    app.require_subcommand(1);

    std::string config_flag;
    app.add_option("--config", config_flag, "Config file (JSON)")->envname("LLB_CONFIG");
    app.set_version_flag("--version", kVersion);

    Overrides o;

    std::string scan_target, scan_set = "all";
    CLI::App* scan = app.add_subcommand("scan", "Run a scanner set against one project tree");
    scan->add_option("--target", scan_target, "Android project directory")->required();
    scan->add_option("--scanner", scan_set, "Scanner set: all, GHERA, VULDROID, or a custom set");
    add_common_flags(scan, o);

    std::string expert_report, expert_comment, expert_author = "expert", expert_target;
    int expert_finding = 0;
    bool expert_rescan = false;
    CLI::App* expert = app.add_subcommand(
        "expert", "Append an expert comment to a report; optionally re-run the scan with it");
    expert->add_option("--report", expert_report, "Report bundle (.data path)")->required();
    expert->add_option("--comment", expert_comment, "Comment text")->required();
    expert->add_option("--author", expert_author, "Comment author");
    expert->add_option("--finding", expert_finding, "1-based finding the comment refers to");
    expert->add_flag("--rescan", expert_rescan,
                     "Re-run the scan with the comment and write a linked report");
    expert->add_option("--target", expert_target,
                       "Project directory for the re-scan (defaults to the recorded app path)");
    add_common_flags(expert, o);

    std::string bench_corpus, bench_set = "all";
    CLI::App* bench =
        app.add_subcommand("bench", "Replay a labeled corpus and tabulate the outcome matrix");
    bench->add_option("--corpus", bench_corpus, "Corpus manifest (JSON)")->required();
    bench->add_option("--scanner", bench_set, "Scanner set the corpus entries resolve in");
    add_common_flags(bench, o);

    std::string registry_file, registry_export;
    CLI::App* registry = app.add_subcommand("registry", "Print or export scanner definitions");
    registry->add_option("--registry", registry_file, "Registry file merged over the built-ins");
    registry->add_option("--export", registry_export,
                         "Write the registry JSON here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        llb::CliConfig cfg;
        if (!config_flag.empty()) cfg = llb::CliConfig::load(config_flag);
        if (scan->parsed()) {
            apply_overrides(scan, o, cfg);
            return cmd_scan(scan_target, scan_set, cfg);
        }
        if (expert->parsed()) {
            apply_overrides(expert, o, cfg);
            std::optional<int> finding;
            if (expert->count("--finding")) finding = expert_finding;
            return cmd_expert(expert_report, expert_comment, expert_author, finding,
                              expert_rescan, expert_target, expert->count("--out") > 0, cfg);
        }
        if (bench->parsed()) {
            apply_overrides(bench, o, cfg);
            return cmd_bench(bench_corpus, bench_set, cfg);
        }
        if (registry->parsed()) return cmd_registry(registry_file, registry_export);
    } catch (const llb::Error& e) {
        std::cerr << "llb: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "llb: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

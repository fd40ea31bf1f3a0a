#pragma once

#include <optional>
#include <string>
#include <vector>

#include "llb/corpus.hpp"
#include "llb/gateway.hpp"
#include "llb/registry.hpp"
#include "llb/sanitize.hpp"
#include "llb/summarize.hpp"

namespace llb {

enum class ScanMode { Basic, SummaryHint, FileRequest, SummaryFileRequest };

const char* scan_mode_name(ScanMode mode);
std::optional<ScanMode> parse_scan_mode(const std::string& name);

struct EngineLimits {
    int max_rounds = 5;
    int max_files_per_round = 3;
    std::size_t context_char_budget = 48000;
};

struct ModelParams {
    std::string model_id = "scripted";
    double temperature = 0.0;
    std::optional<std::int64_t> seed = 1729;
    int max_output_tokens = 4096;
};

enum class Verdict { Insecure, Secure, Undecidable };

const char* verdict_name(Verdict verdict);
std::optional<Verdict> parse_verdict(const std::string& name);

enum class ParseStatus { Clean, Repaired, Failed };

const char* parse_status_name(ParseStatus status);

struct Finding {
    std::string file;  // sanitized rel_path, canonicalized against the view
    std::string snippet;
    std::string explanation;
    std::string suggested_fix;  // empty when the model gave none
};

// What one model reply decomposes into. Absence of a verdict while
// request_files is populated is the normal mid-conversation state.
struct StructuredReply {
    std::optional<Verdict> verdict;
    std::string reason;
    std::vector<Finding> findings;
    std::vector<std::string> requested_files;
    ParseStatus parse_status = ParseStatus::Failed;
};

// Extracts the llb-reply fenced block; on a malformed or missing block one
// lenient repair pass scans for a verdict keyword and request lines (rules in
// docs/formats.md). Never throws: total failure is parse_status=Failed.
StructuredReply parse_model_reply(const std::string& text);

struct ScanResult {
    std::string scan_id;
    std::string app;  // target path as given
    std::string scanner_id;
    ScanMode mode = ScanMode::Basic;
    Verdict verdict = Verdict::Undecidable;
    std::vector<Finding> findings;
    std::string reason_text;
    std::vector<ChatExchange> transcript;
    int rounds_used = 0;
    ParseStatus parse_status = ParseStatus::Failed;
    std::string parent_scan_id;  // set by expert re-analysis

    std::string to_json_text(int indent = 2) const;
    static ScanResult from_json_text(const std::string& text);  // throws SerializationError
};

bool operator==(const ChatExchange& a, const ChatExchange& b);
bool operator==(const Finding& a, const Finding& b);
bool operator==(const ScanResult& a, const ScanResult& b);

// Deterministic, sanitized label for an app directory: the slugs of the last
// two path components. Keyed into scan ids, prompts, and report paths.
std::string app_label_for(const std::filesystem::path& app_root, const SanitizeRules& rules);

std::string make_scan_id(const std::string& app_label, const std::string& scanner_id,
                         ScanMode mode);

struct ScanJob {
    const SanitizedView* view = nullptr;  // borrows; must outlive the call
    ScannerDefinition scanner;
    ScanMode mode = ScanMode::Basic;
    EngineLimits limits;
    ModelParams model;
    SummaryCache* summaries = nullptr;  // required for SummaryFileRequest
    std::string app;                    // reporting label for the target path
    std::string app_label;              // empty -> derived from the view's root
    std::string scan_id;                // empty -> derived
};

// Initial conversation for one scan. Seed contents always; file-request modes
// add the list of other files; SummaryFileRequest adds per-file summaries
// (computing them through gateway on cache miss). Throws
// ContextBudgetExceeded only when the seeds alone overflow the budget.
std::vector<ChatMessage> build_initial_prompt(const ScanJob& job, Gateway* gateway);

// Runs the bounded conversation loop to a ScanResult. Never throws: gateway
// and prompt failures come back as Undecidable results with parse_status
// Failed, so one bad scan cannot abort a batch.
ScanResult run_scan(const ScanJob& job, Gateway& gateway);

// Fresh conversation seeded with the prior scan's final reasoning plus the
// expert's comment; result carries parent_scan_id = prior.scan_id. Throws
// EmptyComment / InvalidArgument (prior without transcript).
ScanResult rescan_with_expert(const ScanResult& prior, const std::string& comment,
                              const ScanJob& job, Gateway& gateway);

}  // namespace llb

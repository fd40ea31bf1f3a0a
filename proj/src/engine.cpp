#include "llb/engine.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/prompts.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

const char* scan_mode_name(ScanMode mode) {
    switch (mode) {
        case ScanMode::Basic: return "basic";
        case ScanMode::SummaryHint: return "summary_hint";
        case ScanMode::FileRequest: return "file_request";
        case ScanMode::SummaryFileRequest: return "summary_file_request";
    }
    return "basic";
}

std::optional<ScanMode> parse_scan_mode(const std::string& name) {
    if (name == "basic") return ScanMode::Basic;
    if (name == "summary_hint") return ScanMode::SummaryHint;
    if (name == "file_request") return ScanMode::FileRequest;
    if (name == "summary_file_request") return ScanMode::SummaryFileRequest;
    return std::nullopt;
}

const char* verdict_name(Verdict verdict) {
    switch (verdict) {
        case Verdict::Insecure: return "insecure";
        case Verdict::Secure: return "secure";
        case Verdict::Undecidable: return "undecidable";
    }
    return "undecidable";
}

std::optional<Verdict> parse_verdict(const std::string& name) {
    std::string lowered = name;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lowered == "insecure") return Verdict::Insecure;
    if (lowered == "secure") return Verdict::Secure;
    if (lowered == "undecidable") return Verdict::Undecidable;
    return std::nullopt;
}

const char* parse_status_name(ParseStatus status) {
    switch (status) {
        case ParseStatus::Clean: return "clean";
        case ParseStatus::Repaired: return "repaired";
        case ParseStatus::Failed: return "failed";
    }
    return "failed";
}

// --- reply parsing ---------------------------------------------------------

namespace {

struct FenceContent {
    std::string content;
    bool terminated = false;
};

std::optional<FenceContent> extract_llb_fence(const std::string& text) {
    size_t open = text.find("```llb-reply");
    if (open == std::string::npos) return std::nullopt;
    size_t body_start = text.find('\n', open);
    if (body_start == std::string::npos) return FenceContent{"", false};
    ++body_start;
    size_t close = text.find("```", body_start);
    if (close == std::string::npos) return FenceContent{text.substr(body_start), false};
    return FenceContent{text.substr(body_start, close - body_start), true};
}

std::string trim_copy(const std::string& text) {
    size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

// Pulls the recognized fields out of a parsed JSON object. Returns false when
// none of the contract keys are present.
bool fill_from_json(const json& doc, StructuredReply& out) {
    if (!doc.is_object()) return false;
    bool recognized = false;
    if (doc.contains("verdict")) {
        recognized = true;
        if (doc["verdict"].is_string()) out.verdict = parse_verdict(doc["verdict"].get<std::string>());
    }
    if (doc.contains("reason")) {
        recognized = true;
        if (doc["reason"].is_string()) out.reason = doc["reason"].get<std::string>();
    }
    if (doc.contains("findings") && doc["findings"].is_array()) {
        recognized = true;
        for (const json& item : doc["findings"]) {
            if (!item.is_object()) continue;
            Finding finding;
            finding.file = item.value("file", "");
            finding.snippet = item.value("snippet", "");
            finding.explanation = item.value("explanation", "");
            finding.suggested_fix = item.value("suggested_fix", "");
            out.findings.push_back(std::move(finding));
        }
    }
    if (doc.contains("request_files") && doc["request_files"].is_array()) {
        recognized = true;
        for (const json& item : doc["request_files"]) {
            if (item.is_string()) out.requested_files.push_back(item.get<std::string>());
        }
    }
    return recognized;
}

std::string strip_path_decor(std::string token) {
    auto is_decor = [](char c) {
        return c == '"' || c == '\'' || c == '`' || c == '[' || c == ']' || c == ',' ||
               c == ' ' || c == '\t' || c == '\r';
    };
    while (!token.empty() && is_decor(token.front())) token.erase(token.begin());
    while (!token.empty() && is_decor(token.back())) token.pop_back();
    return token;
}

// Lenient recovery for replies that ignored the fence contract: a verdict
// keyword scan plus REQUEST:/request_files line extraction.
StructuredReply repair_reply(const std::string& text) {
    StructuredReply reply;
    reply.parse_status = ParseStatus::Failed;

    static const std::regex verdict_re(
        R"(verdict["']?\s*[:=]\s*["']?(insecure|secure|undecidable)\b)",
        std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, verdict_re)) {
        reply.verdict = parse_verdict(m[1].str());
        reply.parse_status = ParseStatus::Repaired;
    }

    static const std::regex request_line_re(R"(^\s*request(?:_files?)?\s*[:=]\s*(.+)$)",
                                            std::regex::icase);
    std::istringstream lines(text);
    std::string line;
    std::vector<std::string> requested;
    while (std::getline(lines, line)) {
        std::smatch lm;
        if (!std::regex_search(line, lm, request_line_re)) continue;
        std::istringstream parts(lm[1].str());
        std::string part;
        while (std::getline(parts, part, ',')) {
            std::string cleaned = strip_path_decor(trim_copy(part));
            if (!cleaned.empty()) requested.push_back(std::move(cleaned));
        }
    }
    if (!requested.empty()) {
        reply.requested_files = std::move(requested);
        reply.parse_status = ParseStatus::Repaired;
    }

    if (reply.parse_status == ParseStatus::Repaired && reply.reason.empty()) {
        std::istringstream again(text);
        while (std::getline(again, line)) {
            std::string trimmed = trim_copy(line);
            if (!trimmed.empty()) {
                reply.reason = trimmed.substr(0, 500);
                break;
            }
        }
    }
    return reply;
}

void dedup_requests(std::vector<std::string>& requested) {
    std::set<std::string> seen;
    std::vector<std::string> unique;
    for (std::string& path : requested) {
        if (seen.insert(path).second) unique.push_back(std::move(path));
    }
    requested = std::move(unique);
}

}  // namespace

StructuredReply parse_model_reply(const std::string& text) {
    if (auto fence = extract_llb_fence(text)) {
        StructuredReply reply;
        try {
            json doc = json::parse(fence->content);
            if (fill_from_json(doc, reply)) {
                reply.parse_status = fence->terminated ? ParseStatus::Clean : ParseStatus::Repaired;
                dedup_requests(reply.requested_files);
                return reply;
            }
        } catch (const json::exception&) {
            // fall through to repair
        }
    } else {
        // Some models emit bare JSON without the fence.
        StructuredReply reply;
        try {
            json doc = json::parse(trim_copy(text));
            if (fill_from_json(doc, reply)) {
                reply.parse_status = ParseStatus::Repaired;
                dedup_requests(reply.requested_files);
                return reply;
            }
        } catch (const json::exception&) {
            // fall through to repair
        }
    }
    StructuredReply reply = repair_reply(text);
    dedup_requests(reply.requested_files);
    return reply;
}

// --- ScanResult serialization ----------------------------------------------

namespace {

json exchange_to_json(const ChatExchange& e) {
    return {{"request_digest", e.request_digest},
            {"response_text", e.response_text},
            {"prompt_tokens", e.prompt_tokens},
            {"completion_tokens", e.completion_tokens},
            {"latency_ms", e.latency_ms},
            {"round_index", e.round_index},
            {"scan_id", e.scan_id},
            {"attempts", e.attempts}};
}

ChatExchange exchange_from_json(const json& doc) {
    ChatExchange e;
    e.request_digest = doc.at("request_digest").get<std::string>();
    e.response_text = doc.at("response_text").get<std::string>();
    e.prompt_tokens = doc.at("prompt_tokens").get<std::int64_t>();
    e.completion_tokens = doc.at("completion_tokens").get<std::int64_t>();
    e.latency_ms = doc.at("latency_ms").get<std::int64_t>();
    e.round_index = doc.at("round_index").get<int>();
    e.scan_id = doc.at("scan_id").get<std::string>();
    e.attempts = doc.at("attempts").get<int>();
    return e;
}

std::string transcript_digest(const std::vector<ChatExchange>& transcript) {
    std::string acc;
    for (const ChatExchange& e : transcript) {
        acc += e.request_digest;
        acc += '\n';
        acc += e.response_text;
        acc += '\n';
    }
    return sha256_hex(acc);
}

}  // namespace

std::string ScanResult::to_json_text(int indent) const {
    json doc;
    doc["schema"] = "llb.scan-result.v1";
    doc["scan_id"] = scan_id;
    doc["app"] = app;
    doc["scanner_id"] = scanner_id;
    doc["mode"] = scan_mode_name(mode);
    doc["verdict"] = verdict_name(verdict);
    doc["parse_status"] = parse_status_name(parse_status);
    doc["reason_text"] = reason_text;
    doc["rounds_used"] = rounds_used;
    doc["parent_scan_id"] = parent_scan_id;
    doc["findings"] = json::array();
    for (const Finding& f : findings) {
        doc["findings"].push_back({{"file", f.file},
                                   {"snippet", f.snippet},
                                   {"explanation", f.explanation},
                                   {"suggested_fix", f.suggested_fix}});
    }
    doc["transcript"] = json::array();
    for (const ChatExchange& e : transcript) doc["transcript"].push_back(exchange_to_json(e));
    doc["transcript_digest"] = transcript_digest(transcript);
    return doc.dump(indent) + "\n";
}

ScanResult ScanResult::from_json_text(const std::string& text) {
    try {
        json doc = json::parse(text);
        ScanResult r;
        r.scan_id = doc.at("scan_id").get<std::string>();
        r.app = doc.at("app").get<std::string>();
        r.scanner_id = doc.at("scanner_id").get<std::string>();
        auto mode = parse_scan_mode(doc.at("mode").get<std::string>());
        if (!mode) throw Error(Errc::SerializationError, "unknown mode");
        r.mode = *mode;
        auto verdict = parse_verdict(doc.at("verdict").get<std::string>());
        if (!verdict) throw Error(Errc::SerializationError, "unknown verdict");
        r.verdict = *verdict;
        std::string status = doc.at("parse_status").get<std::string>();
        if (status == "clean") {
            r.parse_status = ParseStatus::Clean;
        } else if (status == "repaired") {
            r.parse_status = ParseStatus::Repaired;
        } else if (status == "failed") {
            r.parse_status = ParseStatus::Failed;
        } else {
            throw Error(Errc::SerializationError, "unknown parse_status " + status);
        }
        r.reason_text = doc.at("reason_text").get<std::string>();
        r.rounds_used = doc.at("rounds_used").get<int>();
        r.parent_scan_id = doc.value("parent_scan_id", "");
        for (const json& item : doc.at("findings")) {
            Finding f;
            f.file = item.at("file").get<std::string>();
            f.snippet = item.at("snippet").get<std::string>();
            f.explanation = item.at("explanation").get<std::string>();
            f.suggested_fix = item.value("suggested_fix", "");
            r.findings.push_back(std::move(f));
        }
        for (const json& item : doc.at("transcript"))
            r.transcript.push_back(exchange_from_json(item));
        std::string expected = doc.at("transcript_digest").get<std::string>();
        if (expected != transcript_digest(r.transcript))
            throw Error(Errc::SerializationError, "transcript digest mismatch for " + r.scan_id);
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::SerializationError, e.what());
    }
}

bool operator==(const ChatExchange& a, const ChatExchange& b) {
    return a.request_digest == b.request_digest && a.response_text == b.response_text &&
           a.prompt_tokens == b.prompt_tokens && a.completion_tokens == b.completion_tokens &&
           a.latency_ms == b.latency_ms && a.round_index == b.round_index &&
           a.scan_id == b.scan_id && a.attempts == b.attempts;
}

bool operator==(const Finding& a, const Finding& b) {
    return a.file == b.file && a.snippet == b.snippet && a.explanation == b.explanation &&
           a.suggested_fix == b.suggested_fix;
}

bool operator==(const ScanResult& a, const ScanResult& b) {
    return a.scan_id == b.scan_id && a.app == b.app && a.scanner_id == b.scanner_id &&
           a.mode == b.mode && a.verdict == b.verdict && a.findings == b.findings &&
           a.reason_text == b.reason_text && a.transcript == b.transcript &&
           a.rounds_used == b.rounds_used && a.parse_status == b.parse_status &&
           a.parent_scan_id == b.parent_scan_id;
}

// --- identifiers -----------------------------------------------------------

std::string app_label_for(const std::filesystem::path& app_root, const SanitizeRules& rules) {
    std::filesystem::path abs = std::filesystem::absolute(app_root).lexically_normal();
    if (abs.filename().empty()) abs = abs.parent_path();  // drop a trailing slash
    std::string base = abs.filename().string();
    std::string parent = abs.parent_path().filename().string();
    std::string label = slugify(rules.apply(base));
    if (!parent.empty() && parent != "/") {
        label = slugify(rules.apply(parent)) + "-" + label;
    }
    return label;
}

std::string make_scan_id(const std::string& app_label, const std::string& scanner_id,
                         ScanMode mode) {
    return app_label + "." + scanner_id + "." + scan_mode_name(mode);
}

// --- prompt assembly -------------------------------------------------------

namespace {

std::string single_line(const std::string& text) {
    std::string out = text;
    for (char& c : out) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    return trim_copy(out);
}

const char* serve_failure_reason(ProjectIndex::Resolved::Status status) {
    switch (status) {
        case ProjectIndex::Resolved::Status::PathTraversalRejected:
            return "path rejected: it points outside the app";
        case ProjectIndex::Resolved::Status::FileNotInIndex:
            return "no such file in the app";
        default:
            return "not served";
    }
}

}  // namespace

std::vector<ChatMessage> build_initial_prompt(const ScanJob& job, Gateway* gateway) {
    const SanitizedView& view = *job.view;
    const bool file_modes =
        job.mode == ScanMode::FileRequest || job.mode == ScanMode::SummaryFileRequest;

    std::string system = prompts::analyst_system(file_modes, job.limits.max_files_per_round);
    if (job.mode != ScanMode::Basic)
        system += prompts::scanner_block(job.scanner.display_name, job.scanner.brief_summary);

    std::string app_label = job.app_label.empty()
                                ? app_label_for(view.index().root(), view.rules())
                                : job.app_label;
    std::string user = prompts::seed_header(app_label);

    auto seeds = view.index().seed_files();
    std::set<std::string> seed_paths;
    std::string seeds_text;
    for (const FileRecord* seed : seeds) {
        seed_paths.insert(seed->rel_path);
        SanitizedView::Served served = view.serve(view.sanitized_path(seed->rel_path));
        if (!served.ok()) continue;  // tree changed underneath us; noted by engine elsewhere
        seeds_text += prompts::file_section(served.sanitized_path, served.content);
    }
    if (seeds.empty()) seeds_text = prompts::no_seeds_note();
    if (user.size() + seeds_text.size() > job.limits.context_char_budget) {
        throw Error(Errc::ContextBudgetExceeded,
                    "seed files alone exceed the context budget of " +
                        std::to_string(job.limits.context_char_budget) + " characters");
    }
    user += seeds_text;

    if (file_modes) {
        std::string listing = prompts::file_list_header();
        std::size_t remaining_files = 0;
        bool truncated = false;
        for (const FileRecord& record : view.index().files()) {
            if (seed_paths.count(record.rel_path)) continue;
            if (truncated) {
                ++remaining_files;
                continue;
            }
            std::string line = "- " + view.sanitized_path(record.rel_path) + "\n";
            if (job.mode == ScanMode::SummaryFileRequest) {
                if (!job.summaries)
                    throw Error(Errc::InvalidArgument,
                                "summary_file_request mode needs a summary cache");
                if (!gateway)
                    throw Error(Errc::InvalidArgument,
                                "summary_file_request mode needs a gateway for misses");
                SanitizedView::Served served = view.serve(view.sanitized_path(record.rel_path));
                SummarizeOptions opts;
                opts.model_id = job.model.model_id;
                opts.temperature = job.model.temperature;
                opts.seed = job.model.seed;
                FileSummary summary = summarize_file(record, served.sanitized_path,
                                                     served.content, *gateway, *job.summaries,
                                                     opts);
                line += "  summary: " + single_line(summary.summary_text) + "\n";
            }
            if (user.size() + listing.size() + line.size() > job.limits.context_char_budget) {
                truncated = true;
                ++remaining_files;
                continue;
            }
            listing += line;
        }
        if (truncated)
            listing += "(list truncated: " + std::to_string(remaining_files) +
                       " more files not shown)\n";
        user += listing;
    }

    return {{ChatRole::System, std::move(system)}, {ChatRole::User, std::move(user)}};
}

// --- conversation loop -----------------------------------------------------

namespace {

void finalize_verdict(ScanResult& result, StructuredReply& reply, const SanitizedView& view) {
    result.verdict = *reply.verdict;
    result.reason_text = reply.reason;
    result.parse_status = reply.parse_status;

    std::vector<std::string> notes;
    for (std::size_t i = 0; i < reply.findings.size(); ++i) {
        Finding finding = reply.findings[i];
        if (finding.snippet.empty()) {
            notes.push_back("dropped finding " + std::to_string(i + 1) + ": empty snippet");
            continue;
        }
        SanitizedView::Served served = view.serve(finding.file);
        if (!served.ok()) {
            notes.push_back("dropped finding " + std::to_string(i + 1) +
                            ": file not in the app: " + finding.file);
            continue;
        }
        finding.file = served.sanitized_path;
        result.findings.push_back(std::move(finding));
    }

    if (result.verdict == Verdict::Insecure && result.findings.empty()) {
        // The contract requires findings to substantiate INSECURE; without
        // them the reply only counts as repaired (reason present) or failed.
        if (!result.reason_text.empty()) {
            result.parse_status = ParseStatus::Repaired;
        } else {
            result.verdict = Verdict::Undecidable;
            result.parse_status = ParseStatus::Failed;
            result.reason_text = "reply gave INSECURE with no findings and no reason";
        }
    }
    for (const std::string& note : notes) result.reason_text += "\n[engine] " + note;
}

std::string serve_requested_files(const SanitizedView& view,
                                  const std::vector<std::string>& requested,
                                  const EngineLimits& limits) {
    std::string message = prompts::served_files_header();
    int served_count = 0;
    for (const std::string& path : requested) {
        if (served_count >= limits.max_files_per_round) {
            message += prompts::not_served_line(
                path, "request cap is " + std::to_string(limits.max_files_per_round) +
                          " files per round; ask again next round");
            continue;
        }
        SanitizedView::Served served = view.serve(path);
        if (served.status == ProjectIndex::Resolved::Status::AmbiguousBasename) {
            std::string reason = "ambiguous name; candidates:";
            for (const std::string& candidate : served.candidates) reason += " " + candidate;
            message += prompts::not_served_line(path, reason);
            continue;
        }
        if (!served.ok()) {
            message += prompts::not_served_line(path, serve_failure_reason(served.status));
            continue;
        }
        std::string section = prompts::file_section(served.sanitized_path, served.content);
        if (message.size() + section.size() > limits.context_char_budget) {
            std::size_t room = limits.context_char_budget > message.size()
                                   ? limits.context_char_budget - message.size()
                                   : 0;
            if (room < 256) {
                message += prompts::not_served_line(path, "context budget exhausted this round");
                continue;
            }
            const std::string marker = "\n[... truncated to fit the context budget ...]\n---\n";
            section = section.substr(0, room - marker.size()) + marker;
        }
        message += section;
        ++served_count;
    }
    return message;
}

// Shared by run_scan and rescan_with_expert once the opening messages differ.
void run_conversation(const ScanJob& job, Gateway& gateway, std::vector<ChatMessage> messages,
                      ScanResult& result) {
    ParseStatus last_status = ParseStatus::Failed;
    for (int round = 0; round < job.limits.max_rounds; ++round) {
        ChatRequest request;
        request.messages = messages;
        request.model_id = job.model.model_id;
        request.temperature = job.model.temperature;
        request.seed = job.model.seed;
        request.max_output_tokens = job.model.max_output_tokens;

        ChatExchange exchange;
        try {
            exchange = gateway.complete(request, {result.scan_id, round});
        } catch (const Error& e) {
            result.verdict = Verdict::Undecidable;
            result.parse_status = ParseStatus::Failed;
            result.reason_text = std::string("gateway error: ") + e.what();
            result.rounds_used = static_cast<int>(result.transcript.size());
            return;
        }
        result.transcript.push_back(exchange);
        messages.push_back({ChatRole::Assistant, exchange.response_text});

        StructuredReply reply = parse_model_reply(exchange.response_text);
        last_status = reply.parse_status;
        if (reply.verdict) {
            finalize_verdict(result, reply, *job.view);
            result.rounds_used = static_cast<int>(result.transcript.size());
            return;
        }
        if (!reply.requested_files.empty()) {
            messages.push_back(
                {ChatRole::User,
                 serve_requested_files(*job.view, reply.requested_files, job.limits)});
        } else {
            messages.push_back({ChatRole::User, prompts::nudge_reply_format()});
        }
    }
    result.verdict = Verdict::Undecidable;
    result.reason_text = "round limit";
    result.parse_status = last_status;
    result.rounds_used = static_cast<int>(result.transcript.size());
}

void note_empty_seeds(const ScanJob& job, ScanResult& result) {
    if (job.view->index().seed_files().empty())
        result.reason_text +=
            "\n[engine] no seed files (manifest or main activity) found in the target";
}

ScanResult init_result(const ScanJob& job) {
    ScanResult result;
    std::string app_label = job.app_label.empty()
                                ? app_label_for(job.view->index().root(), job.view->rules())
                                : job.app_label;
    result.scan_id =
        job.scan_id.empty() ? make_scan_id(app_label, job.scanner.id, job.mode) : job.scan_id;
    result.app = job.app.empty() ? job.view->index().root().string() : job.app;
    result.scanner_id = job.scanner.id;
    result.mode = job.mode;
    return result;
}

}  // namespace

ScanResult run_scan(const ScanJob& job, Gateway& gateway) {
    ScanResult result = init_result(job);
    std::vector<ChatMessage> messages;
    try {
        messages = build_initial_prompt(job, &gateway);
    } catch (const Error& e) {
        result.verdict = Verdict::Undecidable;
        result.parse_status = ParseStatus::Failed;
        result.reason_text = std::string("scan setup error: ") + e.what();
        return result;
    }
    run_conversation(job, gateway, std::move(messages), result);
    note_empty_seeds(job, result);
    return result;
}

ScanResult rescan_with_expert(const ScanResult& prior, const std::string& comment,
                              const ScanJob& job_in, Gateway& gateway) {
    if (trim_copy(comment).empty())
        throw Error(Errc::EmptyComment, "expert comment must be non-empty");
    if (prior.transcript.empty())
        throw Error(Errc::InvalidArgument, "prior scan " + prior.scan_id + " has no transcript");

    ScanJob job = job_in;
    if (job.scan_id.empty()) job.scan_id = prior.scan_id + "+expert";

    ScanResult result = init_result(job);
    result.parent_scan_id = prior.scan_id;

    std::vector<ChatMessage> messages;
    try {
        messages = build_initial_prompt(job, &gateway);
    } catch (const Error& e) {
        result.verdict = Verdict::Undecidable;
        result.parse_status = ParseStatus::Failed;
        result.reason_text = std::string("scan setup error: ") + e.what();
        return result;
    }
    messages.push_back({ChatRole::Assistant, prior.transcript.back().response_text});
    messages.push_back({ChatRole::User, prompts::expert_followup(comment)});

    run_conversation(job, gateway, std::move(messages), result);
    note_empty_seeds(job, result);
    return result;
}

}  // namespace llb

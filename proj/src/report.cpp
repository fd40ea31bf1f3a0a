#include "llb/report.hpp"

#include <algorithm>
#include <mutex>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

namespace {

// index.json is shared by every bundle of a run; writers for distinct scan
// ids are otherwise independent.
std::mutex index_mutex;

std::string upper(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return text;
}

json comment_to_json(const ExpertComment& c) {
    json doc{{"author", c.author}, {"text", c.text}, {"timestamp", c.timestamp}};
    if (c.finding_index) doc["finding_index"] = *c.finding_index;
    return doc;
}

ExpertComment comment_from_json(const json& doc) {
    ExpertComment c;
    c.author = doc.value("author", "");
    c.text = doc.at("text").get<std::string>();
    c.timestamp = doc.value("timestamp", "");
    if (doc.contains("finding_index") && doc["finding_index"].is_number_integer())
        c.finding_index = doc["finding_index"].get<int>();
    return c;
}

std::string sidecar_text(const ScanResult& result, const std::vector<ExpertComment>& comments) {
    json doc;
    doc["schema"] = "llb.report.v1";
    doc["result"] = json::parse(result.to_json_text());
    doc["expert_comments"] = json::array();
    for (const ExpertComment& c : comments) doc["expert_comments"].push_back(comment_to_json(c));
    return doc.dump(2) + "\n";
}

std::filesystem::path resolve_bundle_path(const std::filesystem::path& given) {
    std::filesystem::path path = given;
    if (path.extension() != ".data") path += ".data";
    return path;
}

void refresh_index(const std::filesystem::path& out_dir, const ReportBundle& bundle) {
    std::lock_guard<std::mutex> lock(index_mutex);
    std::filesystem::path index_path = out_dir / "index.json";
    json doc;
    doc["schema"] = "llb.report-index.v1";
    doc["bundles"] = json::array();
    std::vector<json> entries;
    if (std::filesystem::exists(index_path)) {
        try {
            json prior = json::parse(read_file(index_path));
            for (json& item : prior.at("bundles")) entries.push_back(std::move(item));
        } catch (const std::exception&) {
            // A corrupt index is rebuilt from this bundle onward rather than
            // blocking report writes.
            entries.clear();
        }
    }
    json entry{{"scan_id", bundle.result.scan_id},
               {"app", bundle.app},
               {"scanner_id", bundle.scanner_id},
               {"mode", scan_mode_name(bundle.result.mode)},
               {"verdict", verdict_name(bundle.result.verdict)},
               {"report",
                std::filesystem::relative(bundle.human_report_path, out_dir).generic_string()},
               {"data",
                std::filesystem::relative(bundle.machine_report_path, out_dir).generic_string()}};
    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [&](const json& e) {
                                     return e.value("scan_id", "") == bundle.result.scan_id;
                                 }),
                  entries.end());
    entries.push_back(std::move(entry));
    std::sort(entries.begin(), entries.end(), [](const json& a, const json& b) {
        return a.value("scan_id", "") < b.value("scan_id", "");
    });
    for (json& e : entries) doc["bundles"].push_back(std::move(e));
    write_file(index_path, doc.dump(2) + "\n");
}

void write_path_map(const std::filesystem::path& app_dir, const SanitizedView& view) {
    json doc;
    doc["schema"] = "llb.path-map.v1";
    doc["paths"] = json::object();
    for (const std::string& sanitized : view.paths()) {
        if (auto original = view.original_path(sanitized)) doc["paths"][sanitized] = *original;
    }
    write_file(app_dir / "path_map.json", doc.dump(2) + "\n");
}

}  // namespace

std::string app_slug_of_scan_id(const std::string& scan_id) {
    size_t dot = scan_id.find('.');
    if (dot == std::string::npos || dot == 0) return slugify(scan_id);
    return scan_id.substr(0, dot);
}

std::string render_human_report(const ScanResult& result,
                                const std::vector<ExpertComment>& comments) {
    std::string out;
    out += "# Scan report: " + result.scan_id + "\n\n";
    out += "App: " + result.app + "\n";
    out += "Scanner: " + result.scanner_id + "\n";
    out += "Mode: " + std::string(scan_mode_name(result.mode)) + "\n";
    out += "Verdict: " + upper(verdict_name(result.verdict)) + "\n";
    out += "Rounds used: " + std::to_string(result.rounds_used) + "\n";
    out += "Reply parse: " + std::string(parse_status_name(result.parse_status)) + "\n";
    if (!result.parent_scan_id.empty())
        out += "Re-analysis of: " + result.parent_scan_id + "\n";

    out += "\n## Reasoning\n\n";
    out += result.reason_text.empty() ? "(none given)" : result.reason_text;
    out += "\n\n## Findings\n";
    if (result.findings.empty()) {
        out += "\n(none)\n";
    } else {
        for (std::size_t i = 0; i < result.findings.size(); ++i) {
            const Finding& f = result.findings[i];
            out += "\n### Finding " + std::to_string(i + 1) + ": " + f.file + "\n\n";
            out += "Snippet:\n\n```\n" + f.snippet;
            if (!f.snippet.empty() && f.snippet.back() != '\n') out += "\n";
            out += "```\n\n";
            out += "Explanation: " + (f.explanation.empty() ? "(none)" : f.explanation) + "\n\n";
            out += "Suggested fix: " + (f.suggested_fix.empty() ? "(none)" : f.suggested_fix) +
                   "\n";
        }
    }
    if (!comments.empty()) {
        out += "\n## Expert comments\n\n";
        for (const ExpertComment& c : comments) {
            out += "- [" + c.timestamp + "] " + (c.author.empty() ? "anonymous" : c.author);
            if (c.finding_index) out += " (finding " + std::to_string(*c.finding_index) + ")";
            out += ": " + c.text + "\n";
        }
    }
    return out;
}

std::filesystem::path bundle_data_path(const std::filesystem::path& out_dir,
                                       const std::string& scanner_id,
                                       const std::string& scan_id) {
    return out_dir / app_slug_of_scan_id(scan_id) / scanner_id / (scan_id + ".data");
}

ReportBundle write_report(const ScanResult& result, const std::filesystem::path& out_dir,
                          const SanitizedView* view) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw Error(Errc::OutDirUnwritable, "cannot create output directory " + out_dir.string());

    std::filesystem::path app_dir = out_dir / app_slug_of_scan_id(result.scan_id);
    std::filesystem::path bundle_dir = app_dir / result.scanner_id;
    ReportBundle bundle;
    bundle.app = result.app;
    bundle.scanner_id = result.scanner_id;
    bundle.result = result;
    bundle.human_report_path = bundle_dir / (result.scan_id + ".report");
    bundle.machine_report_path = bundle_dir / (result.scan_id + ".data");

    if (std::filesystem::exists(bundle.machine_report_path) ||
        std::filesystem::exists(bundle.human_report_path)) {
        throw Error(Errc::ReportExists,
                    "report for " + result.scan_id + " already exists; reports are append-only");
    }

    try {
        write_file(bundle.machine_report_path, sidecar_text(result, {}));
        write_file(bundle.human_report_path, render_human_report(result, {}));
        if (view) write_path_map(app_dir, *view);
    } catch (const Error& e) {
        throw Error(Errc::OutDirUnwritable, e.what());
    }
    refresh_index(out_dir, bundle);
    return bundle;
}

ReportBundle load_bundle(const std::filesystem::path& bundle_path) {
    std::filesystem::path data_path = resolve_bundle_path(bundle_path);
    if (!std::filesystem::exists(data_path))
        throw Error(Errc::BundleNotFound, "no report bundle at " + data_path.string());
    try {
        json doc = json::parse(read_file(data_path));
        ReportBundle bundle;
        bundle.result = ScanResult::from_json_text(doc.at("result").dump());
        for (const json& item : doc.at("expert_comments"))
            bundle.expert_comments.push_back(comment_from_json(item));
        bundle.app = bundle.result.app;
        bundle.scanner_id = bundle.result.scanner_id;
        bundle.machine_report_path = data_path;
        bundle.human_report_path = data_path;
        bundle.human_report_path.replace_extension(".report");
        return bundle;
    } catch (const json::exception& e) {
        throw Error(Errc::SerializationError,
                    "malformed report bundle " + data_path.string() + ": " + e.what());
    }
}

ReportBundle append_expert(const std::filesystem::path& bundle_path, ExpertComment comment) {
    ReportBundle bundle = load_bundle(bundle_path);

    std::string trimmed = comment.text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    if (trimmed.empty()) throw Error(Errc::EmptyComment, "expert comment must be non-empty");
    if (comment.finding_index) {
        int n = static_cast<int>(bundle.result.findings.size());
        if (*comment.finding_index < 1 || *comment.finding_index > n) {
            std::string valid = n == 0 ? "the report has no findings"
                                       : "valid indices: 1.." + std::to_string(n);
            throw Error(Errc::FindingIndexOutOfRange,
                        "finding_index " + std::to_string(*comment.finding_index) +
                            " out of range; " + valid);
        }
    }
    if (comment.timestamp.empty()) comment.timestamp = utc_timestamp();

    bundle.expert_comments.push_back(comment);
    write_file(bundle.machine_report_path, sidecar_text(bundle.result, bundle.expert_comments));
    write_file(bundle.human_report_path,
               render_human_report(bundle.result, bundle.expert_comments));
    return bundle;
}

}  // namespace llb

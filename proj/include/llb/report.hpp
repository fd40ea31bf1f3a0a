#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llb/engine.hpp"
#include "llb/sanitize.hpp"

namespace llb {

struct ExpertComment {
    std::string author;
    std::string text;
    std::string timestamp;                  // UTC, filled on append when empty
    std::optional<int> finding_index;       // 1-based, matching the rendered report
};

// One written scan: the human-readable .report, the machine .data sidecar
// that is the source of truth, and any expert comments appended later.
struct ReportBundle {
    std::string app;
    std::string scanner_id;
    ScanResult result;
    std::filesystem::path human_report_path;
    std::filesystem::path machine_report_path;
    std::vector<ExpertComment> expert_comments;
};

// Apps group under the leading dot-segment of the scan id.
std::string app_slug_of_scan_id(const std::string& scan_id);

// Renders the human-readable report text (verdict, reasoning, one section
// per finding, expert comments).
std::string render_human_report(const ScanResult& result,
                                const std::vector<ExpertComment>& comments);

// Writes <out>/<app-slug>/<scanner-id>/<scan-id>.report and .data, then
// refreshes the run-level index.json. Refuses to overwrite an existing
// bundle (reports are append-only). When `view` is given, also writes the
// app-level path_map.json so an operator can undo path sanitization.
// Throws OutDirUnwritable / ReportExists / SerializationError.
ReportBundle write_report(const ScanResult& result, const std::filesystem::path& out_dir,
                          const SanitizedView* view = nullptr);

// Appends one expert comment to an existing bundle and regenerates the human
// report; the stored ScanResult is never modified. `bundle_path` is the .data
// file (the extension may be omitted). Throws BundleNotFound / EmptyComment /
// FindingIndexOutOfRange.
ReportBundle append_expert(const std::filesystem::path& bundle_path, ExpertComment comment);

// Loads the sidecar back; round-trips the ScanResult field-for-field.
// Throws BundleNotFound / SerializationError.
ReportBundle load_bundle(const std::filesystem::path& bundle_path);

// Path of the .data sidecar for a scan id under an output directory.
std::filesystem::path bundle_data_path(const std::filesystem::path& out_dir,
                                       const std::string& scanner_id,
                                       const std::string& scan_id);

}  // namespace llb

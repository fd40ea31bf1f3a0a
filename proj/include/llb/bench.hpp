#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llb/corpus.hpp"
#include "llb/engine.hpp"
#include "llb/registry.hpp"
#include "llb/sanitize.hpp"
#include "llb/summarize.hpp"

namespace llb {

// 3x2 outcome tally: rows are the verdicts, columns the ground truth.
struct EvalMatrix {
    long fi_i = 0;  // flagged insecure, truth insecure
    long fi_s = 0;  // flagged insecure, truth secure
    long fs_i = 0;  // flagged secure, truth insecure
    long fs_s = 0;  // flagged secure, truth secure
    long u_i = 0;   // undecidable, truth insecure
    long u_s = 0;   // undecidable, truth secure

    long total() const { return fi_i + fi_s + fs_i + fs_s + u_i + u_s; }
    long insecure_total() const { return fi_i + fs_i + u_i; }
    long secure_total() const { return fi_s + fs_s + u_s; }

    void tally(GroundTruth truth, Verdict verdict);
};

bool operator==(const EvalMatrix& a, const EvalMatrix& b);

// 100 * (fi_i + fs_s) / total, two decimals; an undecidable verdict counts
// as a misclassification. Throws EmptyMatrix when the matrix is empty.
double accuracy(const EvalMatrix& matrix);

// 100 * fi_i / (fi_i + fs_i + u_i), two decimals. Throws NoInsecureEntries
// when the corpus had no insecure-labeled entries.
double insecure_recall(const EvalMatrix& matrix);

struct LatencyRow {
    std::string scan_id;
    int round = 0;
    std::int64_t latency_ms = 0;
    GroundTruth ground_truth = GroundTruth::Insecure;
};

struct EvalSummary {
    double accuracy_pct = 0.0;
    std::optional<double> insecure_recall_pct;  // absent for secure-only corpora
    std::map<std::string, EvalMatrix> per_category;
    std::vector<LatencyRow> latency_rows;
};

struct CaseRecord {
    std::string scan_id;
    std::string app;
    std::string benchmark_id;
    std::string category;
    std::string scanner_id;
    GroundTruth ground_truth = GroundTruth::Insecure;
    Verdict verdict = Verdict::Undecidable;
    ParseStatus parse_status = ParseStatus::Failed;
    int rounds_used = 0;
    bool resumed = false;  // satisfied from an existing report bundle
    std::string note;      // per-case error text, empty when the scan ran
};

struct BenchJob {
    CorpusManifest corpus;
    std::vector<ScannerDefinition> scanners;  // pool the per-entry scanner ids resolve in
    ScanMode mode = ScanMode::Basic;
    EngineLimits limits;
    ModelParams model;
    SanitizeRules rules = SanitizeRules::defaults();
    std::filesystem::path out_dir;
    SummaryCache* summaries = nullptr;  // required for SummaryFileRequest
    IndexScope scope = IndexScope::Extended;
};

struct BenchOutcome {
    EvalMatrix matrix;
    EvalSummary summary;
    std::vector<CaseRecord> cases;  // corpus order
};

// Scans every corpus entry with its matched scanner, writes report bundles,
// and tallies the matrix. Per-entry failures become Undecidable tallies;
// entries whose bundle already exists under out_dir are resumed, not
// re-scanned. Cases run concurrently up to the gateway's in-flight limit.
// Writes matrix.txt, matrix.json, cases.jsonl, and latency.csv under
// out_dir. Throws DuplicateScanId (two entries mapping to one scan id) and
// EmptyMatrix (empty corpus).
BenchOutcome run_bench(const BenchJob& job, Gateway& gateway);

// One CSV row per exchange, sorted by (scan_id, round); header-only when
// empty.
void export_latency(const std::vector<LatencyRow>& rows, const std::filesystem::path& path);

// The matrix in the three-row, two-column layout plus the derived rates.
std::string render_matrix_text(const std::string& corpus_name, ScanMode mode,
                               const EvalMatrix& matrix, const EvalSummary& summary);

}  // namespace llb

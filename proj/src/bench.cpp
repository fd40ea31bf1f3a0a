#include "llb/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/report.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

void EvalMatrix::tally(GroundTruth truth, Verdict verdict) {
    const bool insecure_truth = truth == GroundTruth::Insecure;
    switch (verdict) {
        case Verdict::Insecure: (insecure_truth ? fi_i : fi_s)++; break;
        case Verdict::Secure: (insecure_truth ? fs_i : fs_s)++; break;
        case Verdict::Undecidable: (insecure_truth ? u_i : u_s)++; break;
    }
}

bool operator==(const EvalMatrix& a, const EvalMatrix& b) {
    return a.fi_i == b.fi_i && a.fi_s == b.fi_s && a.fs_i == b.fs_i && a.fs_s == b.fs_s &&
           a.u_i == b.u_i && a.u_s == b.u_s;
}

double accuracy(const EvalMatrix& matrix) {
    const long total = matrix.total();
    if (total <= 0) throw Error(Errc::EmptyMatrix, "matrix has no tallies");
    return round2(100.0 * static_cast<double>(matrix.fi_i + matrix.fs_s) /
                  static_cast<double>(total));
}

double insecure_recall(const EvalMatrix& matrix) {
    const long column = matrix.insecure_total();
    if (column <= 0)
        throw Error(Errc::NoInsecureEntries, "matrix has no insecure-labeled entries");
    return round2(100.0 * static_cast<double>(matrix.fi_i) / static_cast<double>(column));
}

namespace {

std::string two_decimals(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

struct CaseOutcome {
    CaseRecord record;
    std::vector<LatencyRow> latency;
};

CaseOutcome scan_one_entry(const BenchJob& job, const CorpusEntry& entry,
                           const ScannerDefinition* scanner, const std::string& scan_id,
                           const std::string& app_label, Gateway& gateway) {
    CaseOutcome out;
    out.record.scan_id = scan_id;
    out.record.app = entry.app_dir.string();
    out.record.benchmark_id = entry.benchmark_id;
    out.record.category = entry.category;
    out.record.scanner_id = entry.scanner_id;
    out.record.ground_truth = entry.ground_truth;

    ScanResult result;
    std::filesystem::path data_path = bundle_data_path(job.out_dir, entry.scanner_id, scan_id);
    bool have_result = false;
    if (std::filesystem::exists(data_path)) {
        try {
            result = load_bundle(data_path).result;
            out.record.resumed = true;
            have_result = true;
        } catch (const Error& e) {
            out.record.note = std::string("existing bundle unreadable: ") + e.what();
        }
    }

    if (!have_result && out.record.note.empty()) {
        if (!scanner) {
            out.record.note = "scanner id " + entry.scanner_id + " not in the selected set";
        } else {
            try {
                ProjectIndex index = ProjectIndex::build(entry.app_dir, job.scope);
                SanitizedView view = SanitizedView::build(index, job.rules);
                ScanJob scan_job;
                scan_job.view = &view;
                scan_job.scanner = *scanner;
                scan_job.mode = job.mode;
                scan_job.limits = job.limits;
                scan_job.model = job.model;
                scan_job.summaries = job.summaries;
                scan_job.app = entry.app_dir.string();
                scan_job.app_label = app_label;
                scan_job.scan_id = scan_id;
                result = run_scan(scan_job, gateway);
                have_result = true;
                try {
                    write_report(result, job.out_dir, &view);
                } catch (const Error& e) {
                    out.record.note = std::string("report write failed: ") + e.what();
                }
            } catch (const Error& e) {
                out.record.note = std::string("scan failed: ") + e.what();
            }
        }
    }

    if (!have_result) {
        // Synthesize the Undecidable tally the contract demands for broken
        // entries and leave a bundle behind so the failure is inspectable.
        result.scan_id = scan_id;
        result.app = entry.app_dir.string();
        result.scanner_id = entry.scanner_id;
        result.mode = job.mode;
        result.verdict = Verdict::Undecidable;
        result.parse_status = ParseStatus::Failed;
        result.reason_text = out.record.note;
        try {
            write_report(result, job.out_dir, nullptr);
        } catch (const Error&) {
            // already noted; tally still counts
        }
    }

    out.record.verdict = result.verdict;
    out.record.parse_status = result.parse_status;
    out.record.rounds_used = result.rounds_used;
    for (const ChatExchange& e : result.transcript)
        out.latency.push_back({scan_id, e.round_index, e.latency_ms, entry.ground_truth});
    return out;
}

void write_case_records(const std::filesystem::path& path, const std::vector<CaseRecord>& cases) {
    std::string out;
    for (const CaseRecord& c : cases) {
        json doc{{"scan_id", c.scan_id},
                 {"app", c.app},
                 {"benchmark_id", c.benchmark_id},
                 {"category", c.category},
                 {"scanner_id", c.scanner_id},
                 {"ground_truth", ground_truth_name(c.ground_truth)},
                 {"verdict", verdict_name(c.verdict)},
                 {"parse_status", parse_status_name(c.parse_status)},
                 {"rounds_used", c.rounds_used},
                 {"resumed", c.resumed},
                 {"note", c.note}};
        out += doc.dump() + "\n";
    }
    write_file(path, out);
}

json matrix_to_json(const EvalMatrix& m) {
    return {{"fi_i", m.fi_i}, {"fi_s", m.fi_s}, {"fs_i", m.fs_i},
            {"fs_s", m.fs_s}, {"u_i", m.u_i},   {"u_s", m.u_s}};
}

void write_matrix_json(const std::filesystem::path& path, const std::string& corpus_name,
                       ScanMode mode, const EvalMatrix& matrix, const EvalSummary& summary) {
    json doc;
    doc["schema"] = "llb.matrix.v1";
    doc["corpus"] = corpus_name;
    doc["mode"] = scan_mode_name(mode);
    doc["entries"] = matrix.total();
    doc["matrix"] = matrix_to_json(matrix);
    doc["accuracy_pct"] = summary.accuracy_pct;
    if (summary.insecure_recall_pct)
        doc["insecure_recall_pct"] = *summary.insecure_recall_pct;
    else
        doc["insecure_recall_pct"] = nullptr;
    doc["per_category"] = json::object();
    for (const auto& [category, cat_matrix] : summary.per_category)
        doc["per_category"][category] = matrix_to_json(cat_matrix);
    write_file(path, doc.dump(2) + "\n");
}

}  // namespace

std::string render_matrix_text(const std::string& corpus_name, ScanMode mode,
                               const EvalMatrix& matrix, const EvalSummary& summary) {
    char line[128];
    std::string out;
    out += "Corpus: " + corpus_name + "\n";
    out += "Mode: " + std::string(scan_mode_name(mode)) + "\n";
    std::snprintf(line, sizeof(line), "Entries: %ld (insecure %ld, secure %ld)\n\n",
                  matrix.total(), matrix.insecure_total(), matrix.secure_total());
    out += line;
    out += "                      Ground truth\n";
    out += "                  Insecure    Secure\n";
    std::snprintf(line, sizeof(line), "Flagged insecure  %8ld  %8ld\n", matrix.fi_i, matrix.fi_s);
    out += line;
    std::snprintf(line, sizeof(line), "Flagged secure    %8ld  %8ld\n", matrix.fs_i, matrix.fs_s);
    out += line;
    std::snprintf(line, sizeof(line), "Undecidable       %8ld  %8ld\n", matrix.u_i, matrix.u_s);
    out += line;
    out += "\nAccuracy: " + two_decimals(summary.accuracy_pct) + "%\n";
    if (summary.insecure_recall_pct)
        out += "Insecure recall: " + two_decimals(*summary.insecure_recall_pct) + "%\n";
    return out;
}

void export_latency(const std::vector<LatencyRow>& rows, const std::filesystem::path& path) {
    std::vector<LatencyRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const LatencyRow& a, const LatencyRow& b) {
        if (a.scan_id != b.scan_id) return a.scan_id < b.scan_id;
        return a.round < b.round;
    });
    std::string out = "scan_id,round,latency_ms,ground_truth\n";
    for (const LatencyRow& r : sorted) {
        out += r.scan_id + "," + std::to_string(r.round) + "," + std::to_string(r.latency_ms) +
               "," + ground_truth_name(r.ground_truth) + "\n";
    }
    write_file(path, out);
}

BenchOutcome run_bench(const BenchJob& job, Gateway& gateway) {
    if (job.corpus.entries.empty())
        throw Error(Errc::EmptyMatrix, "corpus " + job.corpus.name + " has no entries");

    std::map<std::string, const ScannerDefinition*> scanner_by_id;
    for (const ScannerDefinition& def : job.scanners) scanner_by_id[def.id] = &def;

    struct Planned {
        const CorpusEntry* entry;
        const ScannerDefinition* scanner;
        std::string app_label;
        std::string scan_id;
    };
    std::vector<Planned> plan;
    std::set<std::string> seen_ids;
    for (const CorpusEntry& entry : job.corpus.entries) {
        Planned p;
        p.entry = &entry;
        auto it = scanner_by_id.find(entry.scanner_id);
        p.scanner = it == scanner_by_id.end() ? nullptr : it->second;
        p.app_label = app_label_for(entry.app_dir, job.rules);
        p.scan_id = make_scan_id(p.app_label, entry.scanner_id, job.mode);
        if (!seen_ids.insert(p.scan_id).second)
            throw Error(Errc::DuplicateScanId,
                        "two corpus entries map to scan id " + p.scan_id);
        plan.push_back(std::move(p));
    }

    std::vector<CaseOutcome> outcomes(plan.size());
    std::atomic<std::size_t> next{0};
    const int workers =
        std::max(1, std::min<int>(gateway.options().max_in_flight,
                                  static_cast<int>(plan.size())));
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= plan.size()) return;
            const Planned& p = plan[i];
            outcomes[i] = scan_one_entry(job, *p.entry, p.scanner, p.scan_id, p.app_label,
                                         gateway);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    BenchOutcome outcome;
    for (CaseOutcome& one : outcomes) {
        outcome.matrix.tally(one.record.ground_truth, one.record.verdict);
        outcome.summary.per_category[one.record.category].tally(one.record.ground_truth,
                                                                one.record.verdict);
        for (LatencyRow& row : one.latency) outcome.summary.latency_rows.push_back(row);
        outcome.cases.push_back(std::move(one.record));
    }
    outcome.summary.accuracy_pct = accuracy(outcome.matrix);
    if (outcome.matrix.insecure_total() > 0)
        outcome.summary.insecure_recall_pct = insecure_recall(outcome.matrix);

    write_file(job.out_dir / "matrix.txt",
               render_matrix_text(job.corpus.name, job.mode, outcome.matrix, outcome.summary));
    write_matrix_json(job.out_dir / "matrix.json", job.corpus.name, job.mode, outcome.matrix,
                      outcome.summary);
    write_case_records(job.out_dir / "cases.jsonl", outcome.cases);
    export_latency(outcome.summary.latency_rows, job.out_dir / "latency.csv");
    return outcome;
}

}  // namespace llb

#include "llb/bench.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/report.hpp"
#include "llb/util.hpp"
#include "testutil.hpp"

namespace llb {
namespace {

using llbtest::finding_json;
using llbtest::make_app;
using llbtest::script_entry;
using llbtest::scripted;
using llbtest::TempDir;
using llbtest::verdict_reply;
using nlohmann::json;

EvalMatrix matrix_of(long fi_i, long fi_s, long fs_i, long fs_s, long u_i, long u_s) {
    EvalMatrix m;
    m.fi_i = fi_i;
    m.fi_s = fi_s;
    m.fs_i = fs_i;
    m.fs_s = fs_s;
    m.u_i = u_i;
    m.u_s = u_s;
    return m;
}

TEST(EvalMatrix, TallyRoutesEveryCell) {
    EvalMatrix m;
    m.tally(GroundTruth::Insecure, Verdict::Insecure);
    m.tally(GroundTruth::Secure, Verdict::Insecure);
    m.tally(GroundTruth::Insecure, Verdict::Secure);
    m.tally(GroundTruth::Secure, Verdict::Secure);
    m.tally(GroundTruth::Insecure, Verdict::Undecidable);
    m.tally(GroundTruth::Secure, Verdict::Undecidable);
    EXPECT_TRUE(m == matrix_of(1, 1, 1, 1, 1, 1));
    EXPECT_EQ(m.total(), 6);
    EXPECT_EQ(m.insecure_total(), 3);
    EXPECT_EQ(m.secure_total(), 3);
}

TEST(EvalRates, ReferenceMatrices) {
    // 119-entry corpus, 60 insecure / 59 secure; undecidables count as wrong.
    EvalMatrix m1 = matrix_of(58, 56, 1, 3, 1, 0);
    EXPECT_DOUBLE_EQ(accuracy(m1), 51.26);
    EXPECT_DOUBLE_EQ(insecure_recall(m1), 96.67);

    EvalMatrix m2 = matrix_of(55, 34, 3, 24, 2, 1);
    EXPECT_DOUBLE_EQ(accuracy(m2), 66.39);
    EXPECT_DOUBLE_EQ(insecure_recall(m2), 91.67);

    EvalMatrix m3 = matrix_of(57, 43, 2, 15, 1, 1);
    EXPECT_DOUBLE_EQ(accuracy(m3), 60.50);
    EXPECT_DOUBLE_EQ(insecure_recall(m3), 95.00);

    EXPECT_DOUBLE_EQ(accuracy(matrix_of(2, 0, 0, 2, 0, 0)), 100.00);
    EXPECT_DOUBLE_EQ(accuracy(matrix_of(0, 3, 0, 0, 0, 0)), 0.00);
}

TEST(EvalRates, DegenerateMatricesThrow) {
    EvalMatrix empty;
    try {
        accuracy(empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyMatrix);
    }
    try {
        insecure_recall(matrix_of(0, 3, 0, 1, 0, 0));  // secure-only corpus
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoInsecureEntries);
    }
}

TEST(MatrixText, RendersTheThreeRowLayout) {
    EvalSummary summary;
    summary.accuracy_pct = 100.00;
    summary.insecure_recall_pct = 100.00;
    std::string text =
        render_matrix_text("demo", ScanMode::Basic, matrix_of(1, 0, 0, 1, 0, 0), summary);
    EXPECT_NE(text.find("Corpus: demo\n"), std::string::npos);
    EXPECT_NE(text.find("Mode: basic\n"), std::string::npos);
    EXPECT_NE(text.find("Entries: 2 (insecure 1, secure 1)\n"), std::string::npos);
    EXPECT_NE(text.find("                      Ground truth\n"
                        "                  Insecure    Secure\n"
                        "Flagged insecure         1         0\n"
                        "Flagged secure           0         1\n"
                        "Undecidable              0         0\n"),
              std::string::npos);
    EXPECT_NE(text.find("Accuracy: 100.00%\n"), std::string::npos);
    EXPECT_NE(text.find("Insecure recall: 100.00%\n"), std::string::npos);

    EvalSummary no_recall;
    no_recall.accuracy_pct = 50.00;
    std::string secure_only =
        render_matrix_text("demo", ScanMode::Basic, matrix_of(0, 1, 0, 1, 0, 0), no_recall);
    EXPECT_EQ(secure_only.find("Insecure recall"), std::string::npos);
}

// Two-app corpus with a scripted backend; the insecure app is flagged and the
// benign one cleared, exercising report writing and every output file.
struct BenchFixture {
    TempDir tmp;
    std::filesystem::path insecure_dir;
    std::filesystem::path secure_dir;
    BenchJob job;
    std::string insecure_scan_id;
    std::string secure_scan_id;

    BenchFixture() {
        insecure_dir = make_app(tmp.path(), "Path-Traversal-Benign");
        secure_dir = make_app(tmp.path(), "Path-Traversal-Fixed");

        job.corpus.name = "mini";
        CorpusEntry bad;
        bad.app_dir = insecure_dir;
        bad.ground_truth = GroundTruth::Insecure;
        bad.benchmark_id = "path-traversal";
        bad.category = "Storage";
        bad.scanner_id = "ghera-storage";
        CorpusEntry good = bad;
        good.app_dir = secure_dir;
        good.ground_truth = GroundTruth::Secure;
        job.corpus.entries = {bad, good};

        job.scanners = ScannerRegistry::builtin().select("all").members;
        job.mode = ScanMode::Basic;
        job.out_dir = tmp.path() / "out";

        insecure_scan_id = make_scan_id(app_label_for(insecure_dir, job.rules), "ghera-storage",
                                        job.mode);
        secure_scan_id = make_scan_id(app_label_for(secure_dir, job.rules), "ghera-storage",
                                      job.mode);
    }

    std::shared_ptr<ScriptedBackend> happy_script() const {
        auto flagged = script_entry(
            insecure_scan_id, 0,
            verdict_reply("INSECURE", "writes to external storage",
                          json::array({finding_json("MainActivity.java", "openFileOutput",
                                                    "world readable")})),
            7);
        auto cleared = script_entry(secure_scan_id, 0,
                                    verdict_reply("SECURE", "storage is app-private"), 3);
        return scripted({flagged, cleared});
    }
};

TEST(RunBench, TalliesScansAndWritesEveryArtifact) {
    BenchFixture fx;
    Gateway gateway(fx.happy_script());
    BenchOutcome outcome = run_bench(fx.job, gateway);

    EXPECT_TRUE(outcome.matrix == matrix_of(1, 0, 0, 1, 0, 0));
    EXPECT_DOUBLE_EQ(outcome.summary.accuracy_pct, 100.00);
    ASSERT_TRUE(outcome.summary.insecure_recall_pct.has_value());
    EXPECT_DOUBLE_EQ(*outcome.summary.insecure_recall_pct, 100.00);
    ASSERT_EQ(outcome.cases.size(), 2u);
    EXPECT_EQ(outcome.cases[0].scan_id, fx.insecure_scan_id);  // corpus order
    EXPECT_EQ(outcome.cases[0].verdict, Verdict::Insecure);
    EXPECT_FALSE(outcome.cases[0].resumed);
    EXPECT_TRUE(outcome.cases[0].note.empty());
    EXPECT_EQ(outcome.cases[1].verdict, Verdict::Secure);

    ASSERT_EQ(outcome.summary.per_category.size(), 1u);
    EXPECT_TRUE(outcome.summary.per_category.at("Storage") == outcome.matrix);

    std::string matrix_txt = read_file(fx.job.out_dir / "matrix.txt");
    EXPECT_NE(matrix_txt.find("Corpus: mini"), std::string::npos);
    EXPECT_NE(matrix_txt.find("Accuracy: 100.00%"), std::string::npos);

    json matrix_json = json::parse(read_file(fx.job.out_dir / "matrix.json"));
    EXPECT_EQ(matrix_json["schema"], "llb.matrix.v1");
    EXPECT_EQ(matrix_json["matrix"]["fi_i"], 1);
    EXPECT_EQ(matrix_json["per_category"]["Storage"]["fs_s"], 1);

    std::istringstream cases_stream(read_file(fx.job.out_dir / "cases.jsonl"));
    std::string line;
    std::vector<json> case_lines;
    while (std::getline(cases_stream, line)) case_lines.push_back(json::parse(line));
    ASSERT_EQ(case_lines.size(), 2u);
    EXPECT_EQ(case_lines[0]["ground_truth"], "insecure");
    EXPECT_EQ(case_lines[0]["verdict"], "insecure");
    EXPECT_EQ(case_lines[1]["verdict"], "secure");

    std::string latency = read_file(fx.job.out_dir / "latency.csv");
    EXPECT_EQ(latency.rfind("scan_id,round,latency_ms,ground_truth\n", 0), 0u);
    EXPECT_NE(latency.find(fx.insecure_scan_id + ",0,7,insecure\n"), std::string::npos);
    EXPECT_NE(latency.find(fx.secure_scan_id + ",0,3,secure\n"), std::string::npos);

    // One report bundle per case, indexed at the run level.
    EXPECT_TRUE(std::filesystem::exists(
        bundle_data_path(fx.job.out_dir, "ghera-storage", fx.insecure_scan_id)));
    json index = json::parse(read_file(fx.job.out_dir / "index.json"));
    EXPECT_EQ(index["bundles"].size(), 2u);
}

TEST(RunBench, ResumesFromExistingBundlesWithoutModelCalls) {
    BenchFixture fx;
    Gateway first(fx.happy_script());
    BenchOutcome original = run_bench(fx.job, first);
    std::string first_latency = read_file(fx.job.out_dir / "latency.csv");
    std::string first_matrix = read_file(fx.job.out_dir / "matrix.txt");

    auto silent = scripted({});  // any model call would throw ScriptMiss
    Gateway second(silent);
    BenchOutcome resumed = run_bench(fx.job, second);

    EXPECT_EQ(silent->send_count(), 0);
    EXPECT_TRUE(resumed.matrix == original.matrix);
    for (const CaseRecord& c : resumed.cases) EXPECT_TRUE(c.resumed) << c.scan_id;
    // Latency history comes from the stored transcripts: byte-equal artifacts.
    EXPECT_EQ(read_file(fx.job.out_dir / "latency.csv"), first_latency);
    EXPECT_EQ(read_file(fx.job.out_dir / "matrix.txt"), first_matrix);
}

TEST(RunBench, UnknownScannerBecomesUndecidableCase) {
    BenchFixture fx;
    fx.job.corpus.entries[1].scanner_id = "ghost-scanner";
    std::string ghost_scan_id =
        make_scan_id(app_label_for(fx.secure_dir, fx.job.rules), "ghost-scanner", fx.job.mode);

    Gateway gateway(fx.happy_script());
    BenchOutcome outcome = run_bench(fx.job, gateway);

    EXPECT_TRUE(outcome.matrix == matrix_of(1, 0, 0, 0, 0, 1));
    EXPECT_EQ(outcome.cases[1].verdict, Verdict::Undecidable);
    EXPECT_NE(outcome.cases[1].note.find("not in the selected set"), std::string::npos);

    // The failure leaves an inspectable bundle behind.
    ReportBundle bundle =
        load_bundle(bundle_data_path(fx.job.out_dir, "ghost-scanner", ghost_scan_id));
    EXPECT_EQ(bundle.result.verdict, Verdict::Undecidable);
    EXPECT_NE(bundle.result.reason_text.find("ghost-scanner"), std::string::npos);
}

TEST(RunBench, ScanWithoutVerdictTalliesUndecidable) {
    BenchFixture fx;
    fx.job.limits.max_rounds = 1;
    Gateway gateway(scripted({script_entry(fx.insecure_scan_id, 0, "no structure at all"),
                              script_entry(fx.secure_scan_id, 0,
                                           verdict_reply("SECURE", "fine"))}));
    BenchOutcome outcome = run_bench(fx.job, gateway);
    EXPECT_TRUE(outcome.matrix == matrix_of(0, 0, 0, 1, 1, 0));
    EXPECT_EQ(outcome.cases[0].parse_status, ParseStatus::Failed);
}

TEST(RunBench, RejectsCollidingScanIds) {
    BenchFixture fx;
    fx.job.corpus.entries[1] = fx.job.corpus.entries[0];  // same dir, same scanner
    Gateway gateway(fx.happy_script());
    try {
        run_bench(fx.job, gateway);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateScanId);
    }
}

TEST(RunBench, RejectsEmptyCorpus) {
    BenchFixture fx;
    fx.job.corpus.entries.clear();
    Gateway gateway(scripted({}));
    try {
        run_bench(fx.job, gateway);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyMatrix);
    }
}

TEST(ExportLatency, SortsRowsAndHandlesEmpty) {
    TempDir tmp;
    std::vector<LatencyRow> rows = {
        {"b.scan", 1, 20, GroundTruth::Secure},
        {"b.scan", 0, 10, GroundTruth::Secure},
        {"a.scan", 0, 5, GroundTruth::Insecure},
    };
    export_latency(rows, tmp.path() / "latency.csv");
    EXPECT_EQ(read_file(tmp.path() / "latency.csv"),
              "scan_id,round,latency_ms,ground_truth\n"
              "a.scan,0,5,insecure\n"
              "b.scan,0,10,secure\n"
              "b.scan,1,20,secure\n");

    export_latency({}, tmp.path() / "empty.csv");
    EXPECT_EQ(read_file(tmp.path() / "empty.csv"), "scan_id,round,latency_ms,ground_truth\n");
}

}  // namespace
}  // namespace llb

#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "llb/corpus.hpp"
#include "llb/gateway.hpp"
#include "llb/sanitize.hpp"

namespace llb {

struct FileSummary {
    std::string content_digest;
    std::string rel_path;  // sanitized path the summary was first produced for
    std::string summary_text;
    std::string model_id;
    std::string created_at;
    bool truncated = false;
};

// Per-file summaries keyed by (content_digest, model_id), persisted as one
// JSON record per entry under a cache directory. Concurrent misses on the
// same key are single-flighted.
class SummaryCache {
public:
    // In-memory only when dir is empty.
    explicit SummaryCache(std::filesystem::path dir = {});

    std::optional<FileSummary> lookup(const std::string& content_digest,
                                      const std::string& model_id) const;

    void store(const FileSummary& summary);

    // Returns the cached summary or computes it via `produce`, guaranteeing
    // at most one in-flight computation per key.
    FileSummary get_or_compute(const std::string& content_digest, const std::string& model_id,
                               const std::function<FileSummary()>& produce);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path entry_path(const std::string& content_digest,
                                     const std::string& model_id) const;
    std::optional<FileSummary> load_from_disk(const std::string& content_digest,
                                              const std::string& model_id) const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::condition_variable key_done_;
    std::map<std::pair<std::string, std::string>, FileSummary> memory_;
    std::set<std::pair<std::string, std::string>> in_flight_;
};

struct SummarizeOptions {
    std::string model_id;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    int max_output_tokens = 512;
    // Contents longer than this are summarized from a head+tail excerpt.
    std::size_t max_content_chars = 16000;
};

// Produces (or fetches) the model-written summary for one file. Binary files
// get their placeholder line as the summary with no model call. The content
// must already be the model-facing (sanitized) text.
FileSummary summarize_file(const FileRecord& record, const std::string& sanitized_rel_path,
                           const std::string& model_facing_content, Gateway& gateway,
                           SummaryCache& cache, const SummarizeOptions& options);

}  // namespace llb

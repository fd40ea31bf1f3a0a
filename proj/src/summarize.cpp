#include "llb/summarize.hpp"

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/prompts.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

SummaryCache::SummaryCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path SummaryCache::entry_path(const std::string& content_digest,
                                               const std::string& model_id) const {
    return dir_ / (content_digest + "-" + slugify(model_id) + ".json");
}

std::optional<FileSummary> SummaryCache::load_from_disk(const std::string& content_digest,
                                                        const std::string& model_id) const {
    if (dir_.empty()) return std::nullopt;
    std::filesystem::path path = entry_path(content_digest, model_id);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        json doc = json::parse(read_file(path));
        FileSummary summary;
        summary.content_digest = doc.at("content_digest").get<std::string>();
        summary.rel_path = doc.at("rel_path").get<std::string>();
        summary.summary_text = doc.at("summary_text").get<std::string>();
        summary.model_id = doc.at("model_id").get<std::string>();
        summary.created_at = doc.at("created_at").get<std::string>();
        summary.truncated = doc.value("truncated", false);
        if (summary.content_digest != content_digest) return std::nullopt;  // stale entry
        return summary;
    } catch (const json::exception&) {
        return std::nullopt;  // corrupt entry, treat as miss
    }
}

std::optional<FileSummary> SummaryCache::lookup(const std::string& content_digest,
                                                const std::string& model_id) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = memory_.find({content_digest, model_id});
        if (it != memory_.end()) return it->second;
    }
    return load_from_disk(content_digest, model_id);
}

void SummaryCache::store(const FileSummary& summary) {
    if (summary.summary_text.empty())
        throw Error(Errc::InvalidArgument, "summary_text must be non-empty");
    {
        std::lock_guard<std::mutex> lock(mutex_);
        memory_[{summary.content_digest, summary.model_id}] = summary;
    }
    if (!dir_.empty()) {
        json doc = {{"content_digest", summary.content_digest},
                    {"rel_path", summary.rel_path},
                    {"summary_text", summary.summary_text},
                    {"model_id", summary.model_id},
                    {"created_at", summary.created_at},
                    {"truncated", summary.truncated}};
        write_file(entry_path(summary.content_digest, summary.model_id), doc.dump(2) + "\n");
    }
}

FileSummary SummaryCache::get_or_compute(const std::string& content_digest,
                                         const std::string& model_id,
                                         const std::function<FileSummary()>& produce) {
    const std::pair<std::string, std::string> key{content_digest, model_id};
    {
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            auto it = memory_.find(key);
            if (it != memory_.end()) return it->second;
            if (!in_flight_.count(key)) break;
            key_done_.wait(lock);
        }
        // Disk probe under the in-flight claim so a concurrent miss waits.
        in_flight_.insert(key);
    }

    std::optional<FileSummary> summary;
    try {
        summary = load_from_disk(content_digest, model_id);
        if (!summary) summary = produce();
    } catch (...) {
        std::lock_guard<std::mutex> lock(mutex_);
        in_flight_.erase(key);
        key_done_.notify_all();
        throw;
    }

    store(*summary);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        in_flight_.erase(key);
        key_done_.notify_all();
    }
    return *summary;
}

FileSummary summarize_file(const FileRecord& record, const std::string& sanitized_rel_path,
                           const std::string& model_facing_content, Gateway& gateway,
                           SummaryCache& cache, const SummarizeOptions& options) {
    if (record.binary) {
        FileSummary summary;
        summary.content_digest = record.content_digest;
        summary.rel_path = sanitized_rel_path;
        summary.summary_text = model_facing_content;  // the placeholder line
        summary.model_id = options.model_id;
        summary.created_at = utc_timestamp();
        return summary;
    }

    return cache.get_or_compute(record.content_digest, options.model_id, [&] {
        std::string excerpt = model_facing_content;
        bool truncated = false;
        if (excerpt.size() > options.max_content_chars) {
            std::size_t half = options.max_content_chars / 2;
            std::size_t omitted = excerpt.size() - 2 * half;
            excerpt = excerpt.substr(0, half) + "\n[... excerpt: " + std::to_string(omitted) +
                      " characters omitted ...]\n" + excerpt.substr(excerpt.size() - half);
            truncated = true;
        }

        ChatRequest request;
        request.model_id = options.model_id;
        request.temperature = options.temperature;
        request.seed = options.seed;
        request.max_output_tokens = options.max_output_tokens;
        request.messages.push_back({ChatRole::System, prompts::summary_system()});
        request.messages.push_back(
            {ChatRole::User, prompts::summary_user(sanitized_rel_path, excerpt)});

        CallKey key{"summary:" + record.content_digest, 0};
        ChatExchange exchange = gateway.complete(request, key);

        FileSummary summary;
        summary.content_digest = record.content_digest;
        summary.rel_path = sanitized_rel_path;
        summary.summary_text =
            exchange.response_text.empty() ? "(no summary returned)" : exchange.response_text;
        summary.model_id = options.model_id;
        summary.created_at = utc_timestamp();
        summary.truncated = truncated;
        return summary;
    });
}

}  // namespace llb

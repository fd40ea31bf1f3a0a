#include "llb/corpus.hpp"

#include <algorithm>
#include <array>
#include <set>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/util.hpp"

namespace llb {

namespace fs = std::filesystem;
using nlohmann::json;

const char* file_role_name(FileRole role) {
    switch (role) {
        case FileRole::Manifest: return "Manifest";
        case FileRole::MainActivity: return "MainActivity";
        case FileRole::GradleBuild: return "GradleBuild";
        case FileRole::NativeLib: return "NativeLib";
        case FileRole::Source: return "Source";
        case FileRole::Resource: return "Resource";
        case FileRole::Other: return "Other";
    }
    return "Other";
}

const char* ground_truth_name(GroundTruth gt) {
    return gt == GroundTruth::Insecure ? "insecure" : "secure";
}

namespace {

std::vector<std::string> split_segments(const std::string& rel_path) {
    std::vector<std::string> segments;
    size_t pos = 0;
    while (pos <= rel_path.size()) {
        size_t next = rel_path.find('/', pos);
        if (next == std::string::npos) {
            segments.push_back(rel_path.substr(pos));
            break;
        }
        segments.push_back(rel_path.substr(pos, next - pos));
        pos = next + 1;
    }
    return segments;
}

bool has_segment(const std::vector<std::string>& segments, const std::string& name) {
    return std::find(segments.begin(), segments.end(), name) != segments.end();
}

// True when the path contains the consecutive run app/src/main.
bool under_main_source(const std::vector<std::string>& segments) {
    for (size_t i = 0; i + 2 < segments.size(); ++i) {
        if (segments[i] == "app" && segments[i + 1] == "src" && segments[i + 2] == "main")
            return true;
    }
    return false;
}

bool binary_extension(const std::string& basename) {
    static const std::array<const char*, 18> exts = {
        ".jar", ".aar",  ".so",       ".dex", ".apk", ".zip",   ".png", ".jpg", ".jpeg",
        ".gif", ".webp", ".ico",      ".bin", ".class", ".keystore", ".jks", ".ttf", ".otf"};
    auto dot = basename.find_last_of('.');
    if (dot == std::string::npos) return false;
    std::string ext = basename.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return std::find(exts.begin(), exts.end(), ext) != exts.end();
}

bool has_ext(const std::string& basename, const char* ext) {
    std::string lower = basename;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    std::string_view sv = lower;
    std::string_view e = ext;
    return sv.size() > e.size() && sv.substr(sv.size() - e.size()) == e;
}

FileRole classify(const std::string& rel_path, const std::vector<std::string>& segments) {
    const std::string base = basename_of(rel_path);
    if (base == "AndroidManifest.xml") return FileRole::Manifest;
    if (base == "MainActivity.java" || base == "MainActivity.kt") return FileRole::MainActivity;
    if (base == "build.gradle" || base == "build.gradle.kts") return FileRole::GradleBuild;
    if (has_segment(segments, "libs")) return FileRole::NativeLib;
    if (has_ext(base, ".java") || has_ext(base, ".kt")) return FileRole::Source;
    if (has_segment(segments, "res") || has_ext(base, ".xml")) return FileRole::Resource;
    return FileRole::Other;
}

// Ranks seed candidates: prefer app/src/main, then the shallower, then the
// lexicographically smaller path.
bool better_seed(const FileRecord& a, const FileRecord& b) {
    bool am = under_main_source(split_segments(a.rel_path));
    bool bm = under_main_source(split_segments(b.rel_path));
    if (am != bm) return am;
    auto depth = [](const std::string& p) { return std::count(p.begin(), p.end(), '/'); };
    if (depth(a.rel_path) != depth(b.rel_path)) return depth(a.rel_path) < depth(b.rel_path);
    return a.rel_path < b.rel_path;
}

}  // namespace

ProjectIndex ProjectIndex::build(const fs::path& root, IndexScope scope) {
    std::error_code ec;
    fs::path abs_root = fs::absolute(root, ec);
    if (ec || !fs::exists(abs_root))
        throw Error(Errc::RootNotFound, root.string());
    if (!fs::is_directory(abs_root))
        throw Error(Errc::NotADirectory, root.string());

    ProjectIndex index;
    index.root_ = fs::canonical(abs_root);
    index.scope_ = scope;

    struct Walked {
        std::string rel_path;
        std::vector<std::string> segments;
    };
    std::vector<Walked> walked;
    bool tree_has_main_source = false;

    fs::recursive_directory_iterator it(index.root_, fs::directory_options::skip_permission_denied,
                                        ec);
    fs::recursive_directory_iterator end;
    for (; it != end; it.increment(ec)) {
        if (ec) {
            index.diagnostics_.push_back("walk error: " + ec.message());
            ec.clear();
            break;
        }
        const fs::directory_entry& entry = *it;
        if (entry.is_symlink()) {
            // Symlinks may point outside the root; never follow them.
            index.diagnostics_.push_back("skipped symlink: " + entry.path().string());
            if (entry.is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file()) continue;

        std::string rel = fs::relative(entry.path(), index.root_, ec).generic_string();
        if (ec) {
            index.diagnostics_.push_back("unreadable entry: " + entry.path().string());
            ec.clear();
            continue;
        }
        Walked w{rel, split_segments(rel)};
        if (under_main_source(w.segments)) tree_has_main_source = true;
        walked.push_back(std::move(w));
    }

    for (const Walked& w : walked) {
        bool in_main = under_main_source(w.segments);
        // Trees without an app/src/main layout stay scannable: every file is
        // treated as main-source scope.
        bool main_scope = tree_has_main_source ? in_main : true;
        if (scope == IndexScope::MainSourceOnly && !main_scope) continue;
        if (scope == IndexScope::Extended) {
            const std::string base = basename_of(w.rel_path);
            bool gradle = base == "build.gradle" || base == "build.gradle.kts";
            bool libs = has_segment(w.segments, "libs");
            if (!main_scope && !gradle && !libs) continue;
        }

        FileRecord record;
        record.rel_path = w.rel_path;
        record.role = classify(w.rel_path, w.segments);
        std::string content;
        try {
            content = read_file(index.root_ / w.rel_path);
        } catch (const Error&) {
            index.diagnostics_.push_back("unreadable entry: " + w.rel_path);
            continue;
        }
        record.size_bytes = content.size();
        record.content_digest = sha256_hex(content);
        record.binary = binary_extension(basename_of(w.rel_path)) || looks_binary(content);
        index.files_.push_back(std::move(record));
    }

    std::sort(index.files_.begin(), index.files_.end(),
              [](const FileRecord& a, const FileRecord& b) { return a.rel_path < b.rel_path; });
    std::sort(index.diagnostics_.begin(), index.diagnostics_.end());
    return index;
}

std::vector<const FileRecord*> ProjectIndex::seed_files() const {
    const FileRecord* manifest = nullptr;
    const FileRecord* main_activity = nullptr;
    for (const FileRecord& record : files_) {
        if (record.role == FileRole::Manifest) {
            if (!manifest || better_seed(record, *manifest)) manifest = &record;
        } else if (record.role == FileRole::MainActivity) {
            if (!main_activity || better_seed(record, *main_activity)) main_activity = &record;
        }
    }
    std::vector<const FileRecord*> seeds;
    if (manifest) seeds.push_back(manifest);
    if (main_activity) seeds.push_back(main_activity);
    return seeds;
}

const FileRecord* ProjectIndex::find(const std::string& rel_path) const {
    auto it = std::lower_bound(files_.begin(), files_.end(), rel_path,
                               [](const FileRecord& r, const std::string& p) {
                                   return r.rel_path < p;
                               });
    if (it != files_.end() && it->rel_path == rel_path) return &*it;
    return nullptr;
}

ProjectIndex::Resolved ProjectIndex::resolve(const std::string& requested) const {
    Resolved result;
    NormalizedPath norm = normalize_rel_path(requested);
    if (!norm.ok()) {
        result.status = Resolved::Status::PathTraversalRejected;
        return result;
    }

    const FileRecord* match = find(norm.path);
    if (!match) {
        std::vector<const FileRecord*> by_basename;
        const std::string wanted = basename_of(norm.path);
        for (const FileRecord& record : files_) {
            if (basename_of(record.rel_path) == wanted) by_basename.push_back(&record);
        }
        if (by_basename.size() == 1) {
            match = by_basename.front();
        } else if (by_basename.size() > 1) {
            result.status = Resolved::Status::AmbiguousBasename;
            for (const FileRecord* r : by_basename) result.candidates.push_back(r->rel_path);
            return result;
        }
    }
    if (!match) {
        result.status = Resolved::Status::FileNotInIndex;
        return result;
    }

    result.status = Resolved::Status::Ok;
    result.record = match;
    result.content = read_file(root_ / match->rel_path);
    return result;
}

bool is_known_category(const std::string& category) {
    static const std::array<const char*, 9> categories = {
        "Crypto", "ICC", "Networking", "NonAPI", "Permission",
        "Storage", "System", "Web", "Other"};
    return std::find(categories.begin(), categories.end(), category) != categories.end();
}

namespace {

bool dir_has_any_file(const fs::path& dir) {
    std::error_code ec;
    fs::recursive_directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec);
    fs::recursive_directory_iterator end;
    for (; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file()) return true;
    }
    return false;
}

}  // namespace

CorpusManifest load_corpus(const fs::path& manifest_path) {
    json doc;
    try {
        doc = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, manifest_path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array())
        throw Error(Errc::ParseError, manifest_path.string() + ": expected {name, entries[]}");

    CorpusManifest manifest;
    manifest.name = doc.value("name", "");
    fs::path base = fs::absolute(manifest_path).parent_path();
    std::set<std::string> seen_dirs;

    for (const json& item : doc["entries"]) {
        if (!item.is_object() || !item.contains("app_dir") || !item.contains("ground_truth") ||
            !item.contains("benchmark_id")) {
            throw Error(Errc::ParseError,
                        "corpus entry needs app_dir, ground_truth, benchmark_id");
        }
        CorpusEntry entry;
        entry.app_dir = (base / item["app_dir"].get<std::string>()).lexically_normal();
        std::string gt = item["ground_truth"].get<std::string>();
        std::transform(gt.begin(), gt.end(), gt.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (gt == "insecure") {
            entry.ground_truth = GroundTruth::Insecure;
        } else if (gt == "secure") {
            entry.ground_truth = GroundTruth::Secure;
        } else {
            throw Error(Errc::ParseError, "ground_truth must be insecure|secure, got " + gt);
        }
        entry.benchmark_id = item["benchmark_id"].get<std::string>();
        entry.category = item.value("category", "Other");
        if (!is_known_category(entry.category))
            throw Error(Errc::ParseError, "unknown category " + entry.category);
        entry.scanner_id = item.value("scanner_id", entry.benchmark_id);

        if (!fs::is_directory(entry.app_dir) || !dir_has_any_file(entry.app_dir))
            throw Error(Errc::MissingAppDir, entry.app_dir.string());
        if (!seen_dirs.insert(entry.app_dir.string()).second)
            throw Error(Errc::DuplicateAppDir, entry.app_dir.string());

        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

}  // namespace llb

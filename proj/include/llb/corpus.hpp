#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace llb {

enum class FileRole { Manifest, MainActivity, GradleBuild, NativeLib, Source, Resource, Other };

const char* file_role_name(FileRole role);

struct FileRecord {
    std::string rel_path;  // '/'-separated, normalized, never escapes the root
    FileRole role = FileRole::Other;
    std::uint64_t size_bytes = 0;
    std::string content_digest;  // SHA-256 hex of the raw bytes
    bool binary = false;
};

enum class IndexScope { MainSourceOnly, Extended };

// Classified, order-stable view of one Android project tree. Immutable after
// construction; safe to share across concurrent scans.
class ProjectIndex {
public:
    // Walks root and classifies every regular file in scope. Unreadable
    // entries are skipped and noted in diagnostics(). Throws RootNotFound /
    // NotADirectory.
    static ProjectIndex build(const std::filesystem::path& root,
                              IndexScope scope = IndexScope::Extended);

    const std::filesystem::path& root() const { return root_; }
    IndexScope scope() const { return scope_; }
    const std::vector<FileRecord>& files() const { return files_; }
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

    // Manifest first, then MainActivity; each only if present.
    std::vector<const FileRecord*> seed_files() const;

    const FileRecord* find(const std::string& rel_path) const;

    struct Resolved {
        enum class Status { Ok, PathTraversalRejected, FileNotInIndex, AmbiguousBasename };
        Status status = Status::FileNotInIndex;
        const FileRecord* record = nullptr;
        std::string content;                  // raw bytes, only when Ok
        std::vector<std::string> candidates;  // basename matches, on ambiguity

        bool ok() const { return status == Status::Ok; }
    };

    // Resolves an untrusted path string: normalize, exact rel_path match,
    // then unique-basename fallback. Never reads outside root.
    Resolved resolve(const std::string& requested) const;

private:
    std::filesystem::path root_;
    IndexScope scope_ = IndexScope::Extended;
    std::vector<FileRecord> files_;
    std::vector<std::string> diagnostics_;
};

enum class GroundTruth { Insecure, Secure };

const char* ground_truth_name(GroundTruth gt);

struct CorpusEntry {
    std::filesystem::path app_dir;  // absolute after load
    GroundTruth ground_truth = GroundTruth::Insecure;
    std::string benchmark_id;
    std::string category;    // one of the registry categories, or "Other"
    std::string scanner_id;  // scanner matched to this entry; defaults to benchmark_id
};

struct CorpusManifest {
    std::string name;
    std::vector<CorpusEntry> entries;
};

// Loads a corpus manifest (JSON, see docs/formats.md). app_dir values are
// resolved relative to the manifest's directory and must exist and be
// non-empty. Throws ParseError / MissingAppDir / DuplicateAppDir.
CorpusManifest load_corpus(const std::filesystem::path& manifest_path);

bool is_known_category(const std::string& category);

}  // namespace llb

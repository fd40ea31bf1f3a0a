#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llb/corpus.hpp"

namespace llb {

enum class CasePolicy { CaseInsensitiveMatch, ExactMatch };

// Ordered token -> substitute replacements applied to every path and file
// content before it reaches a model.
class SanitizeRules {
public:
    struct Replacement {
        std::string token;
        std::string substitute;
    };

    // Validates: tokens non-empty, no substitute contains any token (under
    // the policy). Throws InvalidArgument otherwise.
    SanitizeRules(std::vector<Replacement> replacements, CasePolicy policy);

    // The stock rules: Benign -> llbezpekymyapp, Secure -> llsezpekymyapp,
    // case-insensitive.
    static SanitizeRules defaults();
    static SanitizeRules identity();

    // Loads a rules override file (JSON, see docs/formats.md).
    static SanitizeRules load(const std::filesystem::path& path);

    const std::vector<Replacement>& replacements() const { return replacements_; }
    CasePolicy case_policy() const { return policy_; }

    // Applies every replacement in rule order, left to right, non-overlapping.
    std::string apply(const std::string& text) const;

    // True if any token occurs in text under the policy.
    bool contains_token(const std::string& text) const;

private:
    std::vector<Replacement> replacements_;
    CasePolicy policy_ = CasePolicy::CaseInsensitiveMatch;
};

std::string sanitize_text(const std::string& text, const SanitizeRules& rules);

// Model-facing view of a ProjectIndex: sanitized paths and content, with the
// reverse path mapping kept private so model file requests resolve. Files on
// disk are never touched. Immutable after build.
class SanitizedView {
public:
    // Throws PathCollision when two distinct paths sanitize identically.
    static SanitizedView build(const ProjectIndex& index, SanitizeRules rules);

    const ProjectIndex& index() const { return *index_; }
    const SanitizeRules& rules() const { return rules_; }

    // Sanitized rel_paths in index order (sorted, since sanitization keeps
    // relative order of distinct paths stable only per-path; list is sorted).
    const std::vector<std::string>& paths() const { return sanitized_paths_; }

    std::string sanitized_path(const std::string& original_rel_path) const;
    std::optional<std::string> original_path(const std::string& sanitized_rel_path) const;

    struct Served {
        ProjectIndex::Resolved::Status status = ProjectIndex::Resolved::Status::FileNotInIndex;
        std::string sanitized_path;           // canonical sanitized rel_path when Ok
        std::string content;                  // sanitized text or binary placeholder
        const FileRecord* record = nullptr;
        std::vector<std::string> candidates;  // sanitized, on ambiguity

        bool ok() const { return status == ProjectIndex::Resolved::Status::Ok; }
    };

    // Resolves a model-requested path in the sanitized namespace and returns
    // model-safe content: sanitized text, or a one-line placeholder for
    // binary files.
    Served serve(const std::string& requested) const;

    // Raw content run through the rules (no placeholder handling).
    std::string sanitize_content(const std::string& content) const { return rules_.apply(content); }

    static std::string binary_placeholder(const FileRecord& record);

private:
    const ProjectIndex* index_ = nullptr;
    SanitizeRules rules_ = SanitizeRules::identity();
    std::vector<std::string> sanitized_paths_;           // sorted
    std::map<std::string, std::string> to_original_;     // sanitized -> original
    std::map<std::string, std::string> to_sanitized_;    // original -> sanitized
};

}  // namespace llb

#include "llb/sanitize.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

namespace {

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Finds token in text starting at pos, honoring the case policy.
size_t find_token(const std::string& text, const std::string& token, size_t pos,
                  CasePolicy policy) {
    if (policy == CasePolicy::ExactMatch) return text.find(token, pos);
    // Case-insensitive scan without allocating a lowered copy per call site.
    if (token.empty() || text.size() < token.size()) return std::string::npos;
    for (size_t i = pos; i + token.size() <= text.size(); ++i) {
        bool match = true;
        for (size_t j = 0; j < token.size(); ++j) {
            if (std::tolower(static_cast<unsigned char>(text[i + j])) !=
                std::tolower(static_cast<unsigned char>(token[j]))) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    return std::string::npos;
}

std::string replace_all(const std::string& text, const std::string& token,
                        const std::string& substitute, CasePolicy policy) {
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        size_t hit = find_token(text, token, pos, policy);
        if (hit == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, hit - pos);
        out.append(substitute);
        pos = hit + token.size();
    }
    return out;
}

}  // namespace

SanitizeRules::SanitizeRules(std::vector<Replacement> replacements, CasePolicy policy)
    : replacements_(std::move(replacements)), policy_(policy) {
    for (const Replacement& r : replacements_) {
        if (r.token.empty())
            throw Error(Errc::InvalidArgument, "sanitize token must be non-empty");
        for (const Replacement& other : replacements_) {
            if (find_token(r.substitute, other.token, 0, policy_) != std::string::npos) {
                throw Error(Errc::InvalidArgument,
                            "substitute \"" + r.substitute + "\" contains token \"" +
                                other.token + "\" (would break idempotence)");
            }
        }
    }
}

SanitizeRules SanitizeRules::defaults() {
    return SanitizeRules({{"Benign", "llbezpekymyapp"}, {"Secure", "llsezpekymyapp"}},
                         CasePolicy::CaseInsensitiveMatch);
}

SanitizeRules SanitizeRules::identity() {
    return SanitizeRules({}, CasePolicy::CaseInsensitiveMatch);
}

SanitizeRules SanitizeRules::load(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
    CasePolicy policy = CasePolicy::CaseInsensitiveMatch;
    std::string policy_name = doc.value("case_policy", "case_insensitive");
    if (policy_name == "exact") {
        policy = CasePolicy::ExactMatch;
    } else if (policy_name != "case_insensitive") {
        throw Error(Errc::ParseError, "case_policy must be case_insensitive|exact");
    }
    std::vector<Replacement> replacements;
    for (const json& item : doc.value("replacements", json::array())) {
        replacements.push_back({item.at("token").get<std::string>(),
                                item.at("substitute").get<std::string>()});
    }
    return SanitizeRules(std::move(replacements), policy);
}

std::string SanitizeRules::apply(const std::string& text) const {
    std::string out = text;
    for (const Replacement& r : replacements_) {
        out = replace_all(out, r.token, r.substitute, policy_);
    }
    return out;
}

bool SanitizeRules::contains_token(const std::string& text) const {
    for (const Replacement& r : replacements_) {
        if (find_token(text, r.token, 0, policy_) != std::string::npos) return true;
    }
    return false;
}

std::string sanitize_text(const std::string& text, const SanitizeRules& rules) {
    return rules.apply(text);
}

SanitizedView SanitizedView::build(const ProjectIndex& index, SanitizeRules rules) {
    SanitizedView view;
    view.index_ = &index;
    view.rules_ = std::move(rules);

    for (const FileRecord& record : index.files()) {
        std::string sanitized = view.rules_.apply(record.rel_path);
        auto [it, inserted] = view.to_original_.emplace(sanitized, record.rel_path);
        if (!inserted) {
            throw Error(Errc::PathCollision, "\"" + it->second + "\" and \"" + record.rel_path +
                                                 "\" both sanitize to \"" + sanitized + "\"");
        }
        view.to_sanitized_.emplace(record.rel_path, sanitized);
    }
    for (const auto& [sanitized, original] : view.to_original_)
        view.sanitized_paths_.push_back(sanitized);
    return view;
}

std::string SanitizedView::sanitized_path(const std::string& original_rel_path) const {
    auto it = to_sanitized_.find(original_rel_path);
    return it != to_sanitized_.end() ? it->second : rules_.apply(original_rel_path);
}

std::optional<std::string> SanitizedView::original_path(
    const std::string& sanitized_rel_path) const {
    auto it = to_original_.find(sanitized_rel_path);
    if (it == to_original_.end()) return std::nullopt;
    return it->second;
}

std::string SanitizedView::binary_placeholder(const FileRecord& record) {
    return "<binary file: " + basename_of(record.rel_path) + ", " +
           std::to_string(record.size_bytes) + " bytes>";
}

SanitizedView::Served SanitizedView::serve(const std::string& requested) const {
    Served served;
    NormalizedPath norm = normalize_rel_path(requested);
    if (!norm.ok()) {
        served.status = ProjectIndex::Resolved::Status::PathTraversalRejected;
        return served;
    }

    std::string original;
    auto exact = to_original_.find(norm.path);
    if (exact != to_original_.end()) {
        original = exact->second;
        served.sanitized_path = exact->first;
    } else {
        // Models often request bare filenames; fall back to a unique basename
        // match within the sanitized namespace.
        const std::string wanted = basename_of(norm.path);
        std::vector<const std::pair<const std::string, std::string>*> matches;
        for (const auto& pair : to_original_) {
            if (basename_of(pair.first) == wanted) matches.push_back(&pair);
        }
        if (matches.size() == 1) {
            original = matches.front()->second;
            served.sanitized_path = matches.front()->first;
        } else if (matches.size() > 1) {
            served.status = ProjectIndex::Resolved::Status::AmbiguousBasename;
            for (const auto* pair : matches) served.candidates.push_back(pair->first);
            return served;
        } else {
            served.status = ProjectIndex::Resolved::Status::FileNotInIndex;
            return served;
        }
    }

    ProjectIndex::Resolved resolved = index_->resolve(original);
    if (!resolved.ok()) {
        // The mapping came from the index, so this only happens when the tree
        // changed underneath us; report it as not-found.
        served.status = ProjectIndex::Resolved::Status::FileNotInIndex;
        return served;
    }
    served.status = ProjectIndex::Resolved::Status::Ok;
    served.record = resolved.record;
    if (resolved.record->binary) {
        // Placeholder names the sanitized basename, not the on-disk one.
        served.content = "<binary file: " + basename_of(served.sanitized_path) + ", " +
                         std::to_string(resolved.record->size_bytes) + " bytes>";
    } else {
        served.content = rules_.apply(resolved.content);
    }
    return served;
}

}  // namespace llb

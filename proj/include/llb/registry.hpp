#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace llb {

// One vulnerability class checked via one scan conversation.
struct ScannerDefinition {
    std::string id;            // stable slug, unique in a registry
    std::string display_name;
    std::string category;      // Crypto | ICC | Networking | NonAPI | Permission |
                               // Storage | System | Web | Vuldroid
    std::string brief_summary; // CWE-style description used by summary-bearing modes
    bool enabled = true;
    std::string notes;         // free-form, e.g. related CWE ids
};

struct ScannerSet {
    std::string name;
    std::vector<ScannerDefinition> members;
};

class ScannerRegistry {
public:
    // The scanners shipped with the tool: one per project category plus the
    // V1-V8 whole-app set.
    static ScannerRegistry builtin();

    // builtin() merged with a registry file (JSON, see docs/formats.md).
    // File entries with a fresh id are added; entries reusing a built-in id
    // replace it. Duplicate ids within the file throw DuplicateId.
    static ScannerRegistry load(const std::filesystem::path& path);

    const std::vector<ScannerDefinition>& scanners() const { return scanners_; }
    const ScannerDefinition* find(const std::string& id) const;

    // "all" -> every enabled scanner; "GHERA"/"VULDROID" -> the built-in
    // groups; otherwise a custom set defined in the registry file. Throws
    // UnknownSet / EmptyScannerSet.
    ScannerSet select(const std::string& set_name) const;

    std::vector<std::string> set_names() const;

    std::string to_json_text() const;

private:
    void add(ScannerDefinition def);  // throws DuplicateId
    void replace_or_add(ScannerDefinition def);

    std::vector<ScannerDefinition> scanners_;
    std::vector<std::pair<std::string, std::vector<std::string>>> custom_sets_;
};

bool is_scanner_category(const std::string& category);

}  // namespace llb

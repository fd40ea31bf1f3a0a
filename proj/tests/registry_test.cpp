#include "llb/registry.hpp"

#include <gtest/gtest.h>

#include <regex>
#include <set>

#include "llb/error.hpp"
#include "llb/prompts.hpp"
#include "llb/sanitize.hpp"
#include "testutil.hpp"

namespace llb {
namespace {

using llbtest::put;
using llbtest::TempDir;

TEST(Registry, BuiltinShipsOneScannerPerCategoryPlusVuldroid) {
    ScannerRegistry registry = ScannerRegistry::builtin();
    ASSERT_EQ(registry.scanners().size(), 16u);

    std::set<std::string> ids;
    for (const ScannerDefinition& def : registry.scanners()) {
        ids.insert(def.id);
        EXPECT_TRUE(def.enabled) << def.id;
        EXPECT_TRUE(is_scanner_category(def.category)) << def.category;
        EXPECT_FALSE(def.brief_summary.empty()) << def.id;
    }
    for (const char* id : {"ghera-crypto", "ghera-icc", "ghera-networking", "ghera-nonapi",
                           "ghera-permission", "ghera-storage", "ghera-system", "ghera-web",
                           "vuldroid-v1", "vuldroid-v2", "vuldroid-v3", "vuldroid-v4",
                           "vuldroid-v5", "vuldroid-v6", "vuldroid-v7", "vuldroid-v8"}) {
        EXPECT_TRUE(ids.count(id)) << id;
    }

    ASSERT_NE(registry.find("ghera-web"), nullptr);
    EXPECT_EQ(registry.find("ghera-web")->category, "Web");
    EXPECT_EQ(registry.find("no-such-id"), nullptr);
}

TEST(Registry, VuldroidDisplayNames) {
    ScannerRegistry registry = ScannerRegistry::builtin();
    const std::vector<std::pair<std::string, std::string>> expected = {
        {"vuldroid-v1", "Steal Password MagicLoginLinks"},
        {"vuldroid-v2", "Webview Xss via Exported Activity"},
        {"vuldroid-v3", "Webview Xss via DeepLink"},
        {"vuldroid-v4", "Stealing Files via Webview"},
        {"vuldroid-v5", "Stealing Files via Fileprovider"},
        {"vuldroid-v6", "Intent Sniffing Between Two Applications"},
        {"vuldroid-v7", "Reading User Email via Broadcasts"},
        {"vuldroid-v8", "Command Execution via Malicious App"},
    };
    for (const auto& [id, name] : expected) {
        const ScannerDefinition* def = registry.find(id);
        ASSERT_NE(def, nullptr) << id;
        EXPECT_EQ(def->display_name, name);
    }
}

TEST(Registry, SelectGroupsAreCaseInsensitive) {
    ScannerRegistry registry = ScannerRegistry::builtin();
    EXPECT_EQ(registry.select("all").members.size(), 16u);
    EXPECT_EQ(registry.select("ALL").members.size(), 16u);

    ScannerSet ghera = registry.select("GHERA");
    ASSERT_EQ(ghera.members.size(), 8u);
    for (const ScannerDefinition& def : ghera.members)
        EXPECT_EQ(def.id.rfind("ghera-", 0), 0u) << def.id;

    EXPECT_EQ(registry.select("vuldroid").members.size(), 8u);
    EXPECT_EQ(registry.select("VulDroid").members.size(), 8u);

    try {
        registry.select("no-such-set");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownSet);
    }
}

TEST(Registry, LoadMergesFileOverBuiltin) {
    TempDir tmp;
    put(tmp.path(), "registry.json", R"({
      "scanners": [
        {"id": "custom-logging", "display_name": "Log Leakage",
         "category": "Storage", "brief_summary": "sensitive values written to logcat"},
        {"id": "ghera-web", "display_name": "WebView Weakness", "category": "Web",
         "brief_summary": "replacement text", "enabled": false}
      ],
      "sets": {"focus": ["custom-logging", "ghera-crypto"]}
    })");

    ScannerRegistry registry = ScannerRegistry::load(tmp.path() / "registry.json");
    EXPECT_EQ(registry.scanners().size(), 17u);
    ASSERT_NE(registry.find("custom-logging"), nullptr);
    EXPECT_EQ(registry.find("ghera-web")->brief_summary, "replacement text");
    EXPECT_FALSE(registry.find("ghera-web")->enabled);

    // The disabled replacement drops out of the groups.
    EXPECT_EQ(registry.select("GHERA").members.size(), 7u);
    EXPECT_EQ(registry.select("all").members.size(), 16u);

    ScannerSet focus = registry.select("focus");
    ASSERT_EQ(focus.members.size(), 2u);
    EXPECT_EQ(focus.members[0].id, "custom-logging");
    EXPECT_EQ(focus.members[1].id, "ghera-crypto");

    auto names = registry.set_names();
    EXPECT_NE(std::find(names.begin(), names.end(), "focus"), names.end());
}

TEST(Registry, LoadRejectsBadFiles) {
    TempDir tmp;

    put(tmp.path(), "dup.json", R"({"scanners": [{"id": "x"}, {"id": "x"}]})");
    try {
        ScannerRegistry::load(tmp.path() / "dup.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateId);
    }

    put(tmp.path(), "badset.json", R"({"sets": {"s": ["ghost-scanner"]}})");
    try {
        ScannerRegistry::load(tmp.path() / "badset.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
    }

    put(tmp.path(), "garbage.json", "{{{{");
    try {
        ScannerRegistry::load(tmp.path() / "garbage.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
    }
}

TEST(Registry, EmptySelectionIsAnError) {
    TempDir tmp;
    put(tmp.path(), "registry.json", R"({
      "scanners": [{"id": "off-scanner", "enabled": false}],
      "sets": {"dark": ["off-scanner"]}
    })");
    ScannerRegistry registry = ScannerRegistry::load(tmp.path() / "registry.json");
    try {
        registry.select("dark");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyScannerSet);
    }
}

TEST(Registry, ExportReimportsCleanly) {
    TempDir tmp;
    put(tmp.path(), "registry.json",
        R"({"scanners": [{"id": "extra", "category": "Web"}], "sets": {"mine": ["extra"]}})");
    ScannerRegistry registry = ScannerRegistry::load(tmp.path() / "registry.json");

    put(tmp.path(), "export.json", registry.to_json_text());
    ScannerRegistry again = ScannerRegistry::load(tmp.path() / "export.json");
    EXPECT_EQ(again.scanners().size(), registry.scanners().size());
    EXPECT_EQ(again.select("mine").members.size(), 1u);
}

TEST(Registry, IsScannerCategory) {
    for (const char* c : {"Crypto", "ICC", "Networking", "NonAPI", "Permission", "Storage",
                          "System", "Web", "Vuldroid"}) {
        EXPECT_TRUE(is_scanner_category(c)) << c;
    }
    EXPECT_FALSE(is_scanner_category("crypto"));
    EXPECT_FALSE(is_scanner_category("Other"));
    EXPECT_FALSE(is_scanner_category(""));
}

// Transcripts must never carry the stock sanitizer tokens, so every string the
// tool itself injects has to be token-free once the all-caps verdict keywords
// are set aside (those are the one sanctioned appearance).
std::string strip_verdict_keywords(std::string text) {
    static const std::regex keywords("\\b(INSECURE|SECURE|UNDECIDABLE)\\b");
    return std::regex_replace(text, keywords, "_");
}

TEST(Registry, AuthoredTextIsSanitizeTokenFree) {
    SanitizeRules rules = SanitizeRules::defaults();

    ScannerRegistry registry = ScannerRegistry::builtin();
    for (const ScannerDefinition& def : registry.scanners()) {
        for (const std::string& text : {def.id, def.display_name, def.brief_summary, def.notes}) {
            EXPECT_FALSE(rules.contains_token(strip_verdict_keywords(text)))
                << def.id << ": " << text;
        }
    }

    const std::vector<std::string> prompt_texts = {
        prompts::analyst_system(false, 3),
        prompts::analyst_system(true, 3),
        prompts::scanner_block("name", "summary"),
        prompts::seed_header("app"),
        prompts::no_seeds_note(),
        prompts::file_section("path", "content"),
        prompts::file_list_header(),
        prompts::served_files_header(),
        prompts::not_served_line("path", "reason"),
        prompts::nudge_reply_format(),
        prompts::expert_followup("comment"),
        prompts::summary_system(),
        prompts::summary_user("path", "content"),
    };
    for (const std::string& text : prompt_texts) {
        EXPECT_FALSE(rules.contains_token(strip_verdict_keywords(text))) << text;
    }
}

}  // namespace
}  // namespace llb

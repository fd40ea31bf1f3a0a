#include "llb/sanitize.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "llb/corpus.hpp"
#include "llb/error.hpp"
#include "llb/util.hpp"
#include "testutil.hpp"

namespace llb {
namespace {

using llbtest::put;
using llbtest::TempDir;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Independent oracle: case-insensitive substring search, no SanitizeRules
// machinery involved.
bool contains_ci(const std::string& text, const std::string& needle) {
    return lower(text).find(lower(needle)) != std::string::npos;
}

TEST(SanitizeRules, StockReplacementJoinsAdjacentTokens) {
    auto rules = SanitizeRules::defaults();
    EXPECT_EQ(rules.apply("SecureBenignApp"), "llsezpekymyappllbezpekymyappApp");
}

TEST(SanitizeRules, CaseInsensitiveByDefault) {
    auto rules = SanitizeRules::defaults();
    EXPECT_EQ(rules.apply("SECURE secure SeCuRe"),
              "llsezpekymyapp llsezpekymyapp llsezpekymyapp");
    EXPECT_EQ(rules.apply("benign BENIGN"), "llbezpekymyapp llbezpekymyapp");
    EXPECT_EQ(rules.apply("nothing to change"), "nothing to change");
}

TEST(SanitizeRules, ExactMatchPolicyLeavesOtherCasesAlone) {
    SanitizeRules rules({{"Benign", "placeholder"}}, CasePolicy::ExactMatch);
    EXPECT_EQ(rules.apply("Benign benign BENIGN"), "placeholder benign BENIGN");
}

TEST(SanitizeRules, SubstituteContainingATokenIsRejected) {
    try {
        SanitizeRules({{"Benign", "still-benign-app"}}, CasePolicy::CaseInsensitiveMatch);
        FAIL() << "expected InvalidArgument";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidArgument);
    }
    // Cross-rule containment is just as bad.
    try {
        SanitizeRules({{"Benign", "ok"}, {"Secure", "was-Benign"}},
                      CasePolicy::CaseInsensitiveMatch);
        FAIL() << "expected InvalidArgument";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidArgument);
    }
    try {
        SanitizeRules({{"", "x"}}, CasePolicy::ExactMatch);
        FAIL() << "expected InvalidArgument";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidArgument);
    }
}

TEST(SanitizeRules, SpliceFuzzTokenAbsenceAndIdempotence) {
    auto rules = SanitizeRules::defaults();
    std::mt19937 rng(20240817);
    const std::vector<std::string> pieces = {
        "Benign",  "Secure",   "SECURE",  "benign", "SeCuRe",   "BeNiGn", "Sec",
        "ure",     "Ben",      "ign",     "app",    "/path/to", "_",      "-",
        " ",       "\n",       "x",       "Insecure", "insecurely", "security",
        "llsez",   "pekymyapp"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> len(0, 12);

    for (int i = 0; i < 500; ++i) {
        std::string text;
        int n = len(rng);
        for (int j = 0; j < n; ++j) text += pieces[pick(rng)];
        std::string once = rules.apply(text);
        EXPECT_FALSE(contains_ci(once, "Benign")) << "input: " << text;
        // "Secure" can only be checked as substring because "Insecure"
        // contains it; sanitization must scrub those occurrences too.
        EXPECT_FALSE(contains_ci(once, "Secure")) << "input: " << text;
        EXPECT_FALSE(rules.contains_token(once));
        EXPECT_EQ(rules.apply(once), once) << "not idempotent for: " << text;
    }
}

TEST(SanitizeRules, LoadsRulesFile) {
    TempDir tmp;
    put(tmp.path(), "rules.json",
        R"({"case_policy":"exact","replacements":[{"token":"Acme","substitute":"vendor"}]})");
    auto rules = SanitizeRules::load(tmp.path() / "rules.json");
    EXPECT_EQ(rules.case_policy(), CasePolicy::ExactMatch);
    EXPECT_EQ(rules.apply("Acme acme"), "vendor acme");

    put(tmp.path(), "bad.json", R"({"case_policy":"fuzzy"})");
    try {
        SanitizeRules::load(tmp.path() / "bad.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ParseError);
    }
}

TEST(SanitizeRules, IdentityLeavesTextAlone) {
    auto rules = SanitizeRules::identity();
    EXPECT_EQ(rules.apply("Benign Secure"), "Benign Secure");
    EXPECT_FALSE(rules.contains_token("Benign"));
}

SanitizedView view_for(const ProjectIndex& index) {
    return SanitizedView::build(index, SanitizeRules::defaults());
}

TEST(SanitizedView, MapsPathsBothWays) {
    TempDir tmp;
    auto root = tmp.path() / "Block-Cipher-ECB" / "Benign";
    put(root, "app/src/main/AndroidManifest.xml", "<manifest/>\n");
    put(root, "app/src/main/java/com/benign/MainActivity.java",
        "package com.benign;\nclass MainActivity {}\n");

    ProjectIndex index = ProjectIndex::build(root);
    SanitizedView view = view_for(index);

    std::string sanitized =
        view.sanitized_path("app/src/main/java/com/benign/MainActivity.java");
    EXPECT_EQ(sanitized, "app/src/main/java/com/llbezpekymyapp/MainActivity.java");
    auto original = view.original_path(sanitized);
    ASSERT_TRUE(original.has_value());
    EXPECT_EQ(*original, "app/src/main/java/com/benign/MainActivity.java");

    // Round trip holds for every indexed path.
    for (const FileRecord& record : index.files()) {
        auto back = view.original_path(view.sanitized_path(record.rel_path));
        ASSERT_TRUE(back.has_value());
        EXPECT_EQ(*back, record.rel_path);
    }
}

TEST(SanitizedView, ServeSanitizesContentAndPaths) {
    TempDir tmp;
    auto root = tmp.path() / "app";
    put(root, "AndroidManifest.xml", "<manifest package=\"com.benign.app\"/>\n");
    put(root, "Secure.java", "class Secure { String s = \"Benign\"; }\n");

    ProjectIndex index = ProjectIndex::build(root);
    SanitizedView view = view_for(index);

    auto served = view.serve("llsezpekymyapp.java");
    ASSERT_TRUE(served.ok());
    EXPECT_EQ(served.sanitized_path, "llsezpekymyapp.java");
    EXPECT_EQ(served.content,
              "class llsezpekymyapp { String s = \"llbezpekymyapp\"; }\n");

    // The original (leaked) name is not part of the model-facing namespace;
    // the model never saw it, and the view never serves it.
    EXPECT_EQ(view.serve("Secure.java").status,
              ProjectIndex::Resolved::Status::FileNotInIndex);
}

TEST(SanitizedView, ServeBinaryUsesPlaceholderWithSanitizedName) {
    TempDir tmp;
    auto root = tmp.path() / "app";
    put(root, "AndroidManifest.xml", "<manifest/>\n");
    put(root, "libs/Benign.so", std::string("\x7f\x45\x4c\x46\x00payload", 12));

    ProjectIndex index = ProjectIndex::build(root);
    SanitizedView view = view_for(index);
    auto served = view.serve("libs/llbezpekymyapp.so");
    ASSERT_TRUE(served.ok());
    EXPECT_EQ(served.content, "<binary file: llbezpekymyapp.so, 12 bytes>");
}

TEST(SanitizedView, ServeFailures) {
    TempDir tmp;
    auto root = tmp.path() / "app";
    put(root, "AndroidManifest.xml", "<manifest/>\n");
    put(root, "a/Dup.java", "class Dup {}\n");
    put(root, "b/Dup.java", "class Dup {}\n");

    ProjectIndex index = ProjectIndex::build(root);
    SanitizedView view = view_for(index);
    EXPECT_EQ(view.serve("../../etc/passwd").status,
              ProjectIndex::Resolved::Status::PathTraversalRejected);
    EXPECT_EQ(view.serve("Missing.java").status,
              ProjectIndex::Resolved::Status::FileNotInIndex);
    auto ambiguous = view.serve("Dup.java");
    EXPECT_EQ(ambiguous.status, ProjectIndex::Resolved::Status::AmbiguousBasename);
    EXPECT_EQ(ambiguous.candidates.size(), 2u);
}

TEST(SanitizedView, CollidingPathsThrowNamingBoth) {
    TempDir tmp;
    auto root = tmp.path() / "app";
    put(root, "Benign.txt", "a\n");
    put(root, "llbezpekymyapp.txt", "b\n");

    ProjectIndex index = ProjectIndex::build(root);
    try {
        view_for(index);
        FAIL() << "expected PathCollision";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::PathCollision);
        std::string message = e.what();
        EXPECT_NE(message.find("Benign.txt"), std::string::npos);
        EXPECT_NE(message.find("llbezpekymyapp.txt"), std::string::npos);
    }
}

}  // namespace
}  // namespace llb

#include "llb/registry.hpp"

#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

#include "llb/error.hpp"
#include "llb/util.hpp"

namespace llb {

using nlohmann::json;

bool is_scanner_category(const std::string& category) {
    static const std::array<const char*, 9> categories = {
        "Crypto", "ICC", "Networking", "NonAPI", "Permission",
        "Storage", "System", "Web", "Vuldroid"};
    return std::find(categories.begin(), categories.end(), category) != categories.end();
}

namespace {

// Wording in these summaries is deliberately free of the stock sanitizer
// tokens so scan transcripts never carry them; keep it that way when editing.
std::vector<ScannerDefinition> builtin_definitions() {
    return {
        {"ghera-crypto", "Cryptographic API Misuse", "Crypto",
         "Weak or misused cryptography: block ciphers run in ECB mode, constant or "
         "hard-coded keys and IVs, and encryption keys stored where other apps can read "
         "them. Such flaws let attackers recover or tamper with sensitive data.",
         true, "CWE-327, CWE-321"},
        {"ghera-icc", "Inter-Component Communication Exposure", "ICC",
         "Exported or dynamically registered components that accept intents from arbitrary "
         "apps: intent hijacking and spoofing, unprotected receivers, and pending intents "
         "that expose privileged operations.",
         true, "CWE-927"},
        {"ghera-networking", "Unsafe Network Communication", "Networking",
         "Network traffic open to interception: cleartext HTTP, broken certificate or "
         "hostname validation, and trust managers that accept any certificate, enabling "
         "man-in-the-middle attacks.",
         true, "CWE-295, CWE-319"},
        {"ghera-nonapi", "Vulnerable Library Usage", "NonAPI",
         "Outdated or vulnerable bundled libraries and flaws inherited from third-party "
         "code rather than from the platform API itself.",
         true, "CWE-1104"},
        {"ghera-permission", "Permission Misconfiguration", "Permission",
         "Missing, unnecessary, or weakly protected permissions: components guarded by "
         "normal-level or no permissions, letting unauthorized apps reach privileged "
         "functionality.",
         true, "CWE-276"},
        {"ghera-storage", "Unsafe Data Storage", "Storage",
         "Sensitive data written to world-readable locations, external storage, or exposed "
         "content providers, and SQL injection through unchecked query input.",
         true, "CWE-922, CWE-89"},
        {"ghera-system", "System API Misuse", "System",
         "Privilege escalation and information exposure through system-level APIs: leaked "
         "identifiers, broadcasts of sensitive system events, or granting other apps "
         "elevated capabilities.",
         true, "CWE-269, CWE-200"},
        {"ghera-web", "WebView Weakness", "Web",
         "WebViews that load untrusted content with JavaScript bridges enabled, ignore TLS "
         "errors, or allow file scheme access, enabling script injection and data theft.",
         true, "CWE-79, CWE-749"},
        {"vuldroid-v1", "Steal Password MagicLoginLinks", "Vuldroid",
         "Password reset tokens and magic login links are delivered through deep links "
         "that any app can register to handle, so a malicious app can capture the token "
         "and take over the account.",
         true, "CWE-601"},
        {"vuldroid-v2", "Webview Xss via Exported Activity", "Vuldroid",
         "An exported activity loads web content taken from intent parameters without "
         "validating the URL, letting another app inject JavaScript into the WebView.",
         true, "CWE-79"},
        {"vuldroid-v3", "Webview Xss via DeepLink", "Vuldroid",
         "Deep-link query parameters flow into a WebView without validation, allowing "
         "script injection through a crafted link.",
         true, "CWE-79"},
        {"vuldroid-v4", "Stealing Files via Webview", "Vuldroid",
         "WebView settings permit file:// URLs, so a crafted page can read local app "
         "files and send them to a remote server.",
         true, "CWE-200"},
        {"vuldroid-v5", "Stealing Files via Fileprovider", "Vuldroid",
         "A FileProvider exposes overly broad paths and is reachable through an exported "
         "activity, letting other apps obtain app-private files.",
         true, "CWE-926"},
        {"vuldroid-v6", "Intent Sniffing Between Two Applications", "Vuldroid",
         "Data exchanged between apps through implicit intents lacks protection, so a "
         "third app can intercept the transmitted content.",
         true, "CWE-927"},
        {"vuldroid-v7", "Reading User Email via Broadcasts", "Vuldroid",
         "An exported broadcast receiver hands email content to any app that triggers it.",
         true, "CWE-925"},
        {"vuldroid-v8", "Command Execution via Malicious App", "Vuldroid",
         "An exported entry point lets another app trigger command or operation execution "
         "inside this app without authorization.",
         true, "CWE-78"},
    };
}

}  // namespace

void ScannerRegistry::add(ScannerDefinition def) {
    if (find(def.id)) throw Error(Errc::DuplicateId, def.id);
    scanners_.push_back(std::move(def));
}

void ScannerRegistry::replace_or_add(ScannerDefinition def) {
    for (ScannerDefinition& existing : scanners_) {
        if (existing.id == def.id) {
            existing = std::move(def);
            return;
        }
    }
    scanners_.push_back(std::move(def));
}

ScannerRegistry ScannerRegistry::builtin() {
    ScannerRegistry registry;
    for (ScannerDefinition& def : builtin_definitions()) registry.add(std::move(def));
    return registry;
}

ScannerRegistry ScannerRegistry::load(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }

    ScannerRegistry registry = builtin();
    std::vector<std::string> file_ids;
    for (const json& item : doc.value("scanners", json::array())) {
        ScannerDefinition def;
        try {
            def.id = item.at("id").get<std::string>();
            def.display_name = item.value("display_name", def.id);
            def.category = item.value("category", "Other");
            def.brief_summary = item.value("brief_summary", "");
            def.enabled = item.value("enabled", true);
            def.notes = item.value("notes", "");
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, path.string() + ": " + e.what());
        }
        if (std::find(file_ids.begin(), file_ids.end(), def.id) != file_ids.end())
            throw Error(Errc::DuplicateId, def.id);
        file_ids.push_back(def.id);
        registry.replace_or_add(std::move(def));
    }
    const json sets = doc.value("sets", json::object());
    for (const auto& [name, ids] : sets.items()) {
        std::vector<std::string> members;
        for (const json& id : ids) {
            std::string sid = id.get<std::string>();
            if (!registry.find(sid))
                throw Error(Errc::ParseError, "set " + name + " references unknown scanner " + sid);
            members.push_back(std::move(sid));
        }
        registry.custom_sets_.emplace_back(name, std::move(members));
    }
    return registry;
}

const ScannerDefinition* ScannerRegistry::find(const std::string& id) const {
    for (const ScannerDefinition& def : scanners_) {
        if (def.id == id) return &def;
    }
    return nullptr;
}

ScannerSet ScannerRegistry::select(const std::string& set_name) const {
    std::string lowered = set_name;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });

    ScannerSet result;
    result.name = set_name;
    if (lowered == "all") {
        for (const ScannerDefinition& def : scanners_) {
            if (def.enabled) result.members.push_back(def);
        }
    } else if (lowered == "ghera" || lowered == "vuldroid") {
        const std::string prefix = lowered == "ghera" ? "ghera-" : "vuldroid-";
        for (const ScannerDefinition& def : scanners_) {
            if (def.enabled && def.id.rfind(prefix, 0) == 0) result.members.push_back(def);
        }
    } else {
        auto it = std::find_if(custom_sets_.begin(), custom_sets_.end(),
                               [&](const auto& pair) { return pair.first == set_name; });
        if (it == custom_sets_.end()) throw Error(Errc::UnknownSet, set_name);
        for (const std::string& id : it->second) {
            const ScannerDefinition* def = find(id);
            if (def && def->enabled) result.members.push_back(*def);
        }
    }
    if (result.members.empty()) throw Error(Errc::EmptyScannerSet, set_name);
    return result;
}

std::vector<std::string> ScannerRegistry::set_names() const {
    std::vector<std::string> names = {"all", "GHERA", "VULDROID"};
    for (const auto& [name, ids] : custom_sets_) names.push_back(name);
    return names;
}

std::string ScannerRegistry::to_json_text() const {
    json doc;
    doc["scanners"] = json::array();
    for (const ScannerDefinition& def : scanners_) {
        doc["scanners"].push_back({{"id", def.id},
                                   {"display_name", def.display_name},
                                   {"category", def.category},
                                   {"brief_summary", def.brief_summary},
                                   {"enabled", def.enabled},
                                   {"notes", def.notes}});
    }
    doc["sets"] = json::object();
    for (const auto& [name, ids] : custom_sets_) doc["sets"][name] = ids;
    return doc.dump(2) + "\n";
}

}  // namespace llb

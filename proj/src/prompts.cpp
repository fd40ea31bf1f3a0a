#include "llb/prompts.hpp"

#include <sstream>

namespace llb::prompts {

// Wording note: outside the all-caps verdict keywords, none of these strings
// may contain a stock sanitizer token ("secure"/"benign" in any case); a lint
// test enforces it. Use "vulnerable"/"safe"/"security" instead.

std::string analyst_system(bool allow_file_requests, int max_files_per_round) {
    std::ostringstream ss;
    ss << "You are an Android security analyst. You review application source files and "
          "decide whether the app under review is vulnerable to the weakness class being "
          "scanned for.\n"
          "\n"
          "Reply with exactly one fenced code block labeled llb-reply and nothing else. "
          "The block holds a single JSON object:\n"
          "\n"
          "```llb-reply\n"
          "{\n"
          "  \"verdict\": \"INSECURE\" | \"SECURE\" | \"UNDECIDABLE\",\n"
          "  \"reason\": \"one-paragraph justification\",\n"
          "  \"findings\": [\n"
          "    {\n"
          "      \"file\": \"app-relative path\",\n"
          "      \"snippet\": \"the exact code that shows the problem\",\n"
          "      \"explanation\": \"why this code is a problem\",\n"
          "      \"suggested_fix\": \"how to remediate it\"\n"
          "    }\n"
          "  ],\n"
          "  \"request_files\": [\"app-relative path\"]\n"
          "}\n"
          "```\n"
          "\n"
          "Rules:\n"
          "- \"verdict\" is \"INSECURE\" only when \"findings\" has at least one entry.\n"
          "- \"verdict\" is \"SECURE\" when you judge the app not vulnerable to this "
          "weakness class.\n"
          "- \"verdict\" is \"UNDECIDABLE\" when the available material cannot settle the "
          "question.\n"
          "- Inside a finding, \"suggested_fix\" may be omitted; the other fields are "
          "required.\n";
    if (allow_file_requests) {
        ss << "- To inspect more files before deciding, omit \"verdict\" and list up to "
           << max_files_per_round << " paths in \"request_files\".\n";
    }
    return ss.str();
}

std::string scanner_block(const std::string& display_name, const std::string& brief_summary) {
    std::string block = "\nWeakness class under scan: " + display_name + "\n";
    if (!brief_summary.empty()) block += brief_summary + "\n";
    return block;
}

std::string seed_header(const std::string& app_label) {
    return "Target app: " + app_label + "\n";
}

std::string no_seeds_note() {
    return "\nNo seed files (AndroidManifest.xml or MainActivity.java) were found in this "
           "app.\n";
}

std::string file_section(const std::string& rel_path, const std::string& content) {
    std::string section = "\nFile: " + rel_path + "\n---\n" + content;
    if (section.empty() || section.back() != '\n') section += '\n';
    section += "---\n";
    return section;
}

std::string file_list_header() {
    return "\nOther files in this app:\n";
}

std::string served_files_header() {
    return "Requested file contents:\n";
}

std::string not_served_line(const std::string& rel_path, const std::string& reason) {
    return "\nNot served: " + rel_path + " (" + reason + ")\n";
}

std::string nudge_reply_format() {
    return "Your last reply contained no verdict and no file request. Reply now with the "
           "llb-reply block exactly as specified.\n";
}

std::string expert_followup(const std::string& comment) {
    return "Expert follow-up on your prior analysis:\n" + comment +
           "\n\nRe-evaluate your conclusion in light of this comment and reply with the "
           "llb-reply block.\n";
}

std::string summary_system() {
    return "You summarize Android project files for a security review. Reply with only the "
           "summary text: at most three sentences covering security-relevant behavior such "
           "as exported components, permissions, file and network access, IPC, WebView "
           "use, and handling of untrusted input.\n";
}

std::string summary_user(const std::string& rel_path, const std::string& content) {
    return "File: " + rel_path + "\n\n" + content;
}

}  // namespace llb::prompts

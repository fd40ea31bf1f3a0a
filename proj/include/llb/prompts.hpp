#pragma once

#include <string>

namespace llb::prompts {

// Analyst role plus the llb-reply contract. The same text, with the
// request_files rule appended, serves the file-request modes; callers rely on
// the no-requests variant being a prefix of the with-requests variant.
std::string analyst_system(bool allow_file_requests, int max_files_per_round);

// Appended to the system prompt in every mode except Basic.
std::string scanner_block(const std::string& display_name, const std::string& brief_summary);

std::string seed_header(const std::string& app_label);
std::string no_seeds_note();
std::string file_section(const std::string& rel_path, const std::string& content);
std::string file_list_header();
std::string served_files_header();
std::string not_served_line(const std::string& rel_path, const std::string& reason);
std::string nudge_reply_format();
std::string expert_followup(const std::string& comment);

std::string summary_system();
std::string summary_user(const std::string& rel_path, const std::string& content);

}  // namespace llb::prompts

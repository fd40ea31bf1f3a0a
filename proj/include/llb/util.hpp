#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace llb {

// Hex-encoded SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

// Outcome of lexically normalizing an untrusted, project-relative path string.
struct NormalizedPath {
    enum class Status { Ok, Traversal };
    Status status = Status::Traversal;
    std::string path;  // '/'-separated, no '.'/'..' segments; empty on Traversal

    bool ok() const { return status == Status::Ok; }
};

// Normalizes a path string coming from outside the trust boundary (model
// replies, CLI input). Percent-escapes are decoded once, backslashes are
// treated as separators, and "."/".." segments are resolved lexically.
// Absolute paths, drive letters, NUL bytes, and any upward escape yield
// Traversal.
NormalizedPath normalize_rel_path(std::string_view requested);

// Lowercase [a-z0-9-] identifier derived from arbitrary text; runs of other
// characters collapse to single '-'. Never empty ("x" for all-junk input).
std::string slugify(std::string_view text);

std::string basename_of(std::string_view rel_path);

// UTC wall clock as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

// Whole-file IO. read_file throws Errc::IoError; write_file creates parent
// directories first.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Null-byte sniff over the head of the content.
bool looks_binary(std::string_view content);

// Rounds to two decimals, half away from zero.
double round2(double value);

}  // namespace llb

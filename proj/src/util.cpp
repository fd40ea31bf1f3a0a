#include "llb/util.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "llb/error.hpp"

namespace llb {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &digest_len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Single-pass percent decoding; malformed escapes pass through verbatim.
std::string percent_decode(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    for (size_t i = 0; i < in.size(); ++i) {
        if (in[i] == '%' && i + 2 < in.size()) {
            int hi = hex_value(in[i + 1]);
            int lo = hex_value(in[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>((hi << 4) | lo));
                i += 2;
                continue;
            }
        }
        out.push_back(in[i]);
    }
    return out;
}

}  // namespace

NormalizedPath normalize_rel_path(std::string_view requested) {
    NormalizedPath rejected;
    if (requested.empty()) return rejected;

    std::string decoded = percent_decode(requested);
    if (decoded.find('\0') != std::string::npos) return rejected;
    for (char& c : decoded) {
        if (c == '\\') c = '/';
    }
    if (!decoded.empty() && decoded.front() == '/') return rejected;
    // Drive letters ("C:...") and other scheme-like prefixes.
    if (decoded.size() >= 2 && std::isalpha(static_cast<unsigned char>(decoded[0])) &&
        decoded[1] == ':') {
        return rejected;
    }

    std::vector<std::string> segments;
    size_t pos = 0;
    while (pos <= decoded.size()) {
        size_t next = decoded.find('/', pos);
        std::string seg = decoded.substr(pos, next == std::string::npos ? std::string::npos
                                                                        : next - pos);
        if (seg == "..") {
            if (segments.empty()) return rejected;  // escapes the root
            segments.pop_back();
        } else if (!seg.empty() && seg != ".") {
            segments.push_back(std::move(seg));
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (segments.empty()) return rejected;

    NormalizedPath result;
    result.status = NormalizedPath::Status::Ok;
    for (size_t i = 0; i < segments.size(); ++i) {
        if (i) result.path.push_back('/');
        result.path += segments[i];
    }
    return result;
}

std::string slugify(std::string_view text) {
    std::string out;
    bool pending_dash = false;
    for (char c : text) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            if (pending_dash && !out.empty()) out.push_back('-');
            pending_dash = false;
            out.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            pending_dash = true;
        }
    }
    if (out.empty()) out = "x";
    return out;
}

std::string basename_of(std::string_view rel_path) {
    size_t pos = rel_path.find_last_of('/');
    return std::string(pos == std::string_view::npos ? rel_path : rel_path.substr(pos + 1));
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(Errc::IoError, "read failed for " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

bool looks_binary(std::string_view content) {
    size_t limit = std::min<size_t>(content.size(), 8192);
    for (size_t i = 0; i < limit; ++i) {
        if (content[i] == '\0') return true;
    }
    return false;
}

double round2(double value) {
    return std::round(value * 100.0) / 100.0;
}

}  // namespace llb

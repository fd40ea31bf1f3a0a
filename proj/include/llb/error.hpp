#pragma once

#include <stdexcept>
#include <string>

namespace llb {

// One code per distinct failure the library can report. Keep these stable:
// tests and the CLI exit-code mapping key off them.
enum class Errc {
    RootNotFound,
    NotADirectory,
    ParseError,
    MissingAppDir,
    DuplicateAppDir,
    PathCollision,
    BackendTimeout,
    RateLimited,
    AuthFailure,
    TransientBackend,
    ScriptMiss,
    DigestMismatch,
    DuplicateKey,
    DuplicateId,
    UnknownSet,
    EmptyScannerSet,
    ContextBudgetExceeded,
    OutDirUnwritable,
    SerializationError,
    ReportExists,
    BundleNotFound,
    EmptyComment,
    FindingIndexOutOfRange,
    EmptyMatrix,
    NoInsecureEntries,
    DuplicateScanId,
    InvalidArgument,
    IoError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

// True for failures worth retrying (timeouts, rate limits, 5xx-style errors).
bool is_transient(Errc code);

}  // namespace llb

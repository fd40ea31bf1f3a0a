#include "llb/error.hpp"

namespace llb {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::RootNotFound: return "RootNotFound";
        case Errc::NotADirectory: return "NotADirectory";
        case Errc::ParseError: return "ParseError";
        case Errc::MissingAppDir: return "MissingAppDir";
        case Errc::DuplicateAppDir: return "DuplicateAppDir";
        case Errc::PathCollision: return "PathCollision";
        case Errc::BackendTimeout: return "BackendTimeout";
        case Errc::RateLimited: return "RateLimited";
        case Errc::AuthFailure: return "AuthFailure";
        case Errc::TransientBackend: return "TransientBackend";
        case Errc::ScriptMiss: return "ScriptMiss";
        case Errc::DigestMismatch: return "DigestMismatch";
        case Errc::DuplicateKey: return "DuplicateKey";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::UnknownSet: return "UnknownSet";
        case Errc::EmptyScannerSet: return "EmptyScannerSet";
        case Errc::ContextBudgetExceeded: return "ContextBudgetExceeded";
        case Errc::OutDirUnwritable: return "OutDirUnwritable";
        case Errc::SerializationError: return "SerializationError";
        case Errc::ReportExists: return "ReportExists";
        case Errc::BundleNotFound: return "BundleNotFound";
        case Errc::EmptyComment: return "EmptyComment";
        case Errc::FindingIndexOutOfRange: return "FindingIndexOutOfRange";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::NoInsecureEntries: return "NoInsecureEntries";
        case Errc::DuplicateScanId: return "DuplicateScanId";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

bool is_transient(Errc code) {
    return code == Errc::BackendTimeout || code == Errc::RateLimited ||
           code == Errc::TransientBackend;
}

}  // namespace llb

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace v6forge {

enum class Errc {
    MalformedAddress,
    MalformedPrefix,
    EmptyTable,
    IoError,
    NoSnapshots,
    MalformedRow,
    ProbeFailure,
    NotTeredo,
    EmptySeed,
    SeedTooSmall,
    ConfigInvalid,
    MissingProbedFile,
    NotFullyProbed,
};

inline std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::MalformedAddress: return "MalformedAddress";
    case Errc::MalformedPrefix: return "MalformedPrefix";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::IoError: return "IoError";
    case Errc::NoSnapshots: return "NoSnapshots";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::ProbeFailure: return "ProbeFailure";
    case Errc::NotTeredo: return "NotTeredo";
    case Errc::EmptySeed: return "EmptySeed";
    case Errc::SeedTooSmall: return "SeedTooSmall";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::MissingProbedFile: return "MissingProbedFile";
    case Errc::NotFullyProbed: return "NotFullyProbed";
    }
    return "Unknown";
}

/// Library-wide exception. Carries a machine-checkable code next to the
/// human-readable message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace v6forge

// SPDX-License-Identifier: Apache-2.0
#include <foamrag/error.hpp>

#include <fmt/format.h>

namespace foamrag
{

std::string_view to_string(Errc code)
{
    switch (code)
    {
        case Errc::UnbalancedDelimiters: return "UnbalancedDelimiters";
        case Errc::MissingSemicolon: return "MissingSemicolon";
        case Errc::UnexpectedToken: return "UnexpectedToken";
        case Errc::InvalidEncoding: return "InvalidEncoding";
        case Errc::RawEmissionConflict: return "RawEmissionConflict";
        case Errc::MissingControlDict: return "MissingControlDict";
        case Errc::ParseFailure: return "ParseFailure";
        case Errc::MissingApplication: return "MissingApplication";
        case Errc::UnknownSolver: return "UnknownSolver";
        case Errc::ConflictingEvidence: return "ConflictingEvidence";
        case Errc::MalformedGuidance: return "MalformedGuidance";
        case Errc::EmptyCorpus: return "EmptyCorpus";
        case Errc::NoMatchingCases: return "NoMatchingCases";
        case Errc::EmptyTemplate: return "EmptyTemplate";
        case Errc::UnroutableTarget: return "UnroutableTarget";
        case Errc::SchemaViolation: return "SchemaViolation";
        case Errc::MissingSlot: return "MissingSlot";
        case Errc::GenerationUnparseable: return "GenerationUnparseable";
        case Errc::ExecutorUnavailable: return "ExecutorUnavailable";
        case Errc::ReplayMiss: return "ReplayMiss";
        case Errc::PortConfiguration: return "PortConfiguration";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(Errc code, std::string const& message):
    std::runtime_error(fmt::format("{}: {}", to_string(code), message)), _code(code)
{
}

ParseError::ParseError(Errc code, SourcePosition position, std::string const& detail):
    Error(code, fmt::format("line {}, column {}: {}", position.line, position.column, detail)),
    _position(position)
{
}

} // namespace foamrag

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace foamrag
{

enum class Errc
{
    UnbalancedDelimiters,
    MissingSemicolon,
    UnexpectedToken,
    InvalidEncoding,
    RawEmissionConflict,
    MissingControlDict,
    ParseFailure,
    MissingApplication,
    UnknownSolver,
    ConflictingEvidence,
    MalformedGuidance,
    EmptyCorpus,
    NoMatchingCases,
    EmptyTemplate,
    UnroutableTarget,
    SchemaViolation,
    MissingSlot,
    GenerationUnparseable,
    ExecutorUnavailable,
    ReplayMiss,
    PortConfiguration,
    Io,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI exit-code mapping) can branch without string
/// matching on messages.
class Error: public std::runtime_error
{
public:
    Error(Errc code, std::string const& message);

    [[nodiscard]] Errc code() const noexcept { return _code; }

private:
    Errc _code;
};

struct SourcePosition
{
    std::size_t offset = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

class ParseError: public Error
{
public:
    ParseError(Errc code, SourcePosition position, std::string const& detail);

    [[nodiscard]] SourcePosition const& position() const noexcept { return _position; }

private:
    SourcePosition _position;
};

} // namespace foamrag

// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>

#include <algorithm>
#include <regex>
#include <sstream>

namespace foamrag::agent
{

namespace
{

std::string lower(std::string text)
{
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

std::string trim(std::string const& text)
{
    auto const first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    auto const last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

bool containsAny(std::string const& haystack, std::initializer_list<std::string_view> needles)
{
    return std::any_of(needles.begin(), needles.end(),
                       [&](std::string_view needle) { return haystack.find(needle) != std::string::npos; });
}

// Lines of the fatal-error message: after the FOAM FATAL banner up to the
// "From ..." trace, or the whole log when there is no banner.
std::vector<std::string> errorBlock(std::string const& log)
{
    auto lines = std::vector<std::string> {};
    auto stream = std::istringstream(log);
    for (std::string line; std::getline(stream, line);)
        lines.push_back(line);
    auto const banner = std::find_if(lines.begin(), lines.end(),
                                     [](std::string const& line) { return line.find("FOAM FATAL") != std::string::npos; });
    if (banner == lines.end())
        return lines;
    auto block = std::vector<std::string> {};
    for (auto it = std::next(banner); it != lines.end(); ++it)
    {
        auto const text = trim(*it);
        if (text.rfind("From ", 0) == 0 || text.rfind("FOAM exiting", 0) == 0)
            break;
        block.push_back(*it);
    }
    return block;
}

std::string joined(std::vector<std::string> const& lines)
{
    auto out = std::string {};
    for (auto const& line: lines)
        out += line + "\n";
    return out;
}

std::optional<std::string> implicatedFile(std::string const& text)
{
    static std::regex const pattern(R"((?:^|[\s"'/])((?:0|constant|system)/[A-Za-z][A-Za-z0-9_.]*))");
    std::smatch match;
    if (std::regex_search(text, match, pattern))
        return match[1].str();
    return std::nullopt;
}

std::optional<std::string> implicatedPatch(std::string const& text)
{
    static std::regex const forPatch(R"(for patch\s+"?([A-Za-z0-9_.*:-]+))");
    static std::regex const inBoundary(R"(boundaryField/([^/"\s]+))");
    std::smatch match;
    if (std::regex_search(text, match, forPatch) || std::regex_search(text, match, inBoundary))
        return match[1].str();
    return std::nullopt;
}

// Earliest keyword-like token: "keyword X", a quoted token without path
// separators, or a call-like token such as div(phi,U).
std::optional<std::string> implicatedKeyword(std::string const& text)
{
    static std::regex const named(R"(keyword\s+([^\s"]+))");
    static std::regex const quoted(R"re("([^"/\s]+)")re");
    static std::regex const call(R"([A-Za-z_][A-Za-z0-9_]*\([^()\s"]*\))");
    auto best = std::optional<std::pair<std::ptrdiff_t, std::string>> {};
    for (auto const* pattern: { &named, &quoted, &call })
    {
        std::smatch match;
        if (!std::regex_search(text, match, *pattern))
            continue;
        auto const position = match.position(1 < match.size() && match[1].matched ? 1 : 0);
        auto token = match.size() > 1 && match[1].matched ? match[1].str() : match[0].str();
        if (!best || position < best->first)
            best = std::pair { position, std::move(token) };
    }
    if (!best)
        return std::nullopt;
    return best->second;
}

} // namespace

std::string error_signature(std::string const& log)
{
    // Numbers standing alone; digits inside names such as p0 or U_0 stay.
    static std::regex const number(R"((^|[^A-Za-z0-9_./])[0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?(?![A-Za-z0-9_]))");
    for (auto const& line: errorBlock(log))
    {
        auto const text = trim(line);
        if (!text.empty())
            return std::regex_replace(text, number, "$1#");
    }
    return "<empty log>";
}

ErrorDiagnosis classify_error(std::string const& log, ReflectionState const& state)
{
    auto diagnosis = ErrorDiagnosis {};
    auto const block = joined(errorBlock(log));
    auto const text = lower(block);
    diagnosis.signature = error_signature(log);
    diagnosis.keyword = implicatedKeyword(block);
    diagnosis.patch = implicatedPatch(block);
    auto file = implicatedFile(block);
    if (!file)
        file = implicatedFile(log);

    auto const seen = state.signature_counts.count(diagnosis.signature) ? state.signature_counts.at(diagnosis.signature) : 0;
    if (containsAny(text, { "cannot find file", "cannot open file" }))
        diagnosis.category = rag::ErrorCategory::FileMissing;
    else if (containsAny(text, { "different dimensions", "inconsistent dimensions", "incompatible dimensions",
                                 "dimension mismatch", "dimensions mismatch" }))
        diagnosis.category = rag::ErrorCategory::Dimensional;
    else
    {
        static std::regex const expected(R"(\bexpected\b)");
        static std::regex const patch(R"(\bpatch|boundaryfield)");
        static std::regex const scheme(R"(\b(div|grad|laplacian|interpolate|sngrad)\(|fvschemes|discretisation scheme)");
        static std::regex const linear(R"(fvsolution|\bsolver\b|\btolerance\b|\breltol\b|\bpreconditioner\b|relaxation|solving for)");
        auto const underZero = file && file->rfind("0/", 0) == 0;
        // A persistent error keeps its sub-type so the implicated file is still known.
        diagnosis.category =
            seen + 1 >= PersistentThreshold ? rag::ErrorCategory::Persistent : rag::ErrorCategory::ComplexConfiguration;
        if (text.find("foamfile") != std::string::npos || std::regex_search(text, expected))
            diagnosis.sub_type = rag::ErrorSubType::SetupFormats;
        else if (std::regex_search(text, patch) || underZero)
            diagnosis.sub_type = rag::ErrorSubType::ICBCs;
        else if (std::regex_search(text, scheme))
            diagnosis.sub_type = rag::ErrorSubType::DiscretizationSchemes;
        else if (std::regex_search(text, linear))
            diagnosis.sub_type = rag::ErrorSubType::LinearSolvers;
        else
        {
            diagnosis.sub_type = rag::ErrorSubType::SetupFormats;
            diagnosis.notes.push_back("unclassified log; treated as a setup format error");
        }
    }

    if (file)
        diagnosis.file = *file;
    else if (diagnosis.sub_type == rag::ErrorSubType::DiscretizationSchemes)
        diagnosis.file = "system/fvSchemes";
    else if (diagnosis.sub_type == rag::ErrorSubType::LinearSolvers)
        diagnosis.file = "system/fvSolution";
    else
        diagnosis.file = "system/controlDict";
    if (diagnosis.category == rag::ErrorCategory::Dimensional)
        diagnosis.notes.push_back("dimensional error routed through the generic configuration path");
    return diagnosis;
}

} // namespace foamrag::agent

// SPDX-License-Identifier: Apache-2.0
#include <foamrag/error.hpp>
#include <foamrag/rag.hpp>

#include <fmt/format.h>

#include <array>

namespace foamrag::rag
{

namespace
{

constexpr std::array strategyNames { std::pair { Strategy::CascadingFallback, std::string_view { "cascading_fallback" } },
                                     std::pair { Strategy::AllModel, std::string_view { "all_model" } },
                                     std::pair { Strategy::Template, std::string_view { "template" } },
                                     std::pair { Strategy::MultiSource, std::string_view { "multi_source" } },
                                     std::pair { Strategy::Keyword, std::string_view { "keyword" } } };

bool startsWith(std::string const& text, std::string_view prefix)
{
    return text.rfind(prefix, 0) == 0;
}

} // namespace

std::string_view to_string(Strategy strategy)
{
    for (auto const& [value, name]: strategyNames)
        if (value == strategy)
            return name;
    return "unknown";
}

std::optional<Strategy> strategy_from_string(std::string_view name)
{
    for (auto const& [value, label]: strategyNames)
        if (label == name)
            return value;
    return std::nullopt;
}

std::string_view to_string(ErrorCategory category)
{
    switch (category)
    {
    case ErrorCategory::FileMissing:
        return "FileMissing";
    case ErrorCategory::Dimensional:
        return "Dimensional";
    case ErrorCategory::Persistent:
        return "Persistent";
    case ErrorCategory::ComplexConfiguration:
        return "ComplexConfiguration";
    }
    return "unknown";
}

std::string_view to_string(ErrorSubType sub_type)
{
    switch (sub_type)
    {
    case ErrorSubType::SetupFormats:
        return "SetupFormats";
    case ErrorSubType::ICBCs:
        return "ICBCs";
    case ErrorSubType::DiscretizationSchemes:
        return "DiscretizationSchemes";
    case ErrorSubType::LinearSolvers:
        return "LinearSolvers";
    }
    return "unknown";
}

Route dispatch_init(SetupDescriptor const& target)
{
    if (!target.is_file())
        return Route { Strategy::MultiSource, false, {} };
    auto const& file = target.target;
    if (file == "system/fvSchemes")
        return Route { Strategy::AllModel, false, {} };
    if (file == "system/fvSolution")
        return Route { Strategy::Template, false, {} };
    if (file == "system/controlDict")
        return Route { Strategy::Template, false, "system/controlDict grouped with solver controls" };
    if (startsWith(file, "constant/") || startsWith(file, "0/"))
        return Route { Strategy::CascadingFallback, false, {} };
    throw Error(Errc::UnroutableTarget, fmt::format("no retrieval strategy for {}", file));
}

Route dispatch_reflect(ReflectTarget const& target)
{
    switch (target.category)
    {
    case ErrorCategory::FileMissing:
    case ErrorCategory::Persistent: {
        auto route = dispatch_init(SetupDescriptor::file(target.file));
        route.regenerate = true;
        route.note = fmt::format("{}: regenerate {}", to_string(target.category), target.file);
        return route;
    }
    case ErrorCategory::Dimensional:
    case ErrorCategory::ComplexConfiguration:
        break;
    }

    auto const sub = target.sub_type.value_or(ErrorSubType::SetupFormats);
    if (target.category == ErrorCategory::ComplexConfiguration && sub == ErrorSubType::ICBCs)
        return Route { Strategy::MultiSource, false, {} };
    if (target.category == ErrorCategory::ComplexConfiguration && sub == ErrorSubType::LinearSolvers)
        return Route { Strategy::Template, false, {} };

    auto note = target.category == ErrorCategory::Dimensional ? std::string { "Dimensional: generic configuration path" }
                                                              : std::string {};
    if (target.keyword && !target.keyword->empty())
        return Route { Strategy::Keyword, false, std::move(note) };
    if (target.file.empty())
        throw Error(Errc::UnroutableTarget, "error names neither a keyword nor a file");
    auto route = Route { Strategy::CascadingFallback, false, std::move(note) };
    if (!startsWith(target.file, "constant/") && !startsWith(target.file, "0/") && !startsWith(target.file, "system/"))
        throw Error(Errc::UnroutableTarget, fmt::format("no retrieval strategy for {}", target.file));
    return route;
}

} // namespace foamrag::rag

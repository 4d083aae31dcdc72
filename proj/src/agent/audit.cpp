// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>
#include <foamrag/error.hpp>

#include <fmt/format.h>

#include <sstream>

namespace foamrag::agent
{

using json = nlohmann::ordered_json;

namespace
{

std::string lastSegment(std::string const& path)
{
    auto const slash = path.rfind('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

bool touches(std::string const& path, std::string const& param)
{
    if (path == param)
        return true;
    auto stream = std::istringstream(path);
    for (std::string part; std::getline(stream, part, '/');)
        if (part == param)
            return true;
    return false;
}

std::string origin(json const& retrieval)
{
    if (retrieval.is_null())
        return "no retrieval recorded";
    auto const& audit = retrieval.at("audit");
    auto const level = audit.at("winning_level");
    auto ids = std::vector<std::string> {};
    for (auto const& id: audit.at("result_case_ids"))
        ids.push_back(id.get<std::string>());
    return fmt::format("{}, level {}; cases: {}", retrieval.at("strategy").get<std::string>(),
                       level.is_number() ? std::to_string(level.get<int>()) : level.get<std::string>(),
                       ids.empty() ? std::string { "none" } : fmt::format("{}", fmt::join(ids, ", ")));
}

std::string prefix(json const& write)
{
    return write.contains("round") ? fmt::format("round {}: ", write.at("round").get<int>()) : std::string {};
}

} // namespace

std::vector<std::string> audit_report(std::string const& trail_jsonl, std::optional<std::string> const& param)
{
    auto lines = std::vector<std::string> {};
    auto retrieval = json {};
    auto stream = std::istringstream(trail_jsonl);
    auto number = 0;
    for (std::string line; std::getline(stream, line);)
    {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            auto const event = json::parse(line);
            if (!event.is_object() || !event.contains("event") || !event.at("event").is_string())
                throw Error(Errc::SchemaViolation, fmt::format("trail line {}: not an event object", number));
            auto const kind = event.at("event").get<std::string>();
            if (kind == "retrieval")
            {
                retrieval = event;
                continue;
            }
            if (kind != "write")
                continue;
            auto const file = event.at("file").get<std::string>();
            auto const action = event.at("action").get<std::string>();
            auto const from = origin(retrieval);
            if (action == "correct")
            {
                for (auto const& change: event.at("changes"))
                {
                    auto const key = change.at("key").get<std::string>();
                    if (param && !touches(key, *param))
                        continue;
                    auto const& now = change.at("new");
                    auto const what = now.is_null() ? fmt::format("Removed {}", lastSegment(key))
                                                     : fmt::format("Corrected {} using {}", lastSegment(key), now.get<std::string>());
                    lines.push_back(fmt::format("{}{}: {} ({})", prefix(event), file, what, from));
                }
                continue;
            }
            auto const verb = action == "generate" ? "Generated" : "Regenerated";
            if (!param)
            {
                lines.push_back(fmt::format("{}{} {} ({})", prefix(event), verb, file, from));
                continue;
            }
            for (auto const& key: event.at("keys"))
                if (touches(key.get<std::string>(), *param))
                    lines.push_back(fmt::format("{}{}: {} {} ({})", prefix(event), file, verb, key.get<std::string>(), from));
        }
        catch (nlohmann::json::exception const& error)
        {
            throw Error(Errc::SchemaViolation, fmt::format("trail line {}: {}", number, error.what()));
        }
    }
    return lines;
}

} // namespace foamrag::agent

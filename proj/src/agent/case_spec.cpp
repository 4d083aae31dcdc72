// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>
#include <foamrag/error.hpp>
#include <foamrag/io.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace foamrag::agent
{

using json = nlohmann::ordered_json;

namespace
{

[[noreturn]] void violation(std::string const& field, std::string const& detail)
{
    throw Error(Errc::SchemaViolation, fmt::format("{}: {}", field, detail));
}

std::string requireString(json const& document, std::string const& key)
{
    if (!document.contains(key))
        violation(key, "missing");
    if (!document.at(key).is_string() || document.at(key).get<std::string>().empty())
        violation(key, "must be a non-empty string");
    return document.at(key).get<std::string>();
}

std::vector<std::string> requireStrings(json const& document, std::string const& key)
{
    if (!document.contains(key))
        violation(key, "missing");
    if (!document.at(key).is_array())
        violation(key, "must be an array of strings");
    auto out = std::vector<std::string> {};
    for (auto const& item: document.at(key))
    {
        if (!item.is_string())
            violation(key, "must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

bool isSetupPath(std::string const& path)
{
    for (auto const* prefix: { "0/", "constant/", "system/" })
    {
        auto const p = std::string_view(prefix);
        if (path.size() > p.size() && path.compare(0, p.size(), p) == 0 && path.find('/', p.size()) == std::string::npos)
            return true;
    }
    return false;
}

} // namespace

CaseSpec load_case_spec(json const& document, std::map<std::string, bool> const& compressibility)
{
    if (!document.is_object())
        violation("document", "must be an object");
    auto spec = CaseSpec {};
    spec.name = document.value("name", std::string {});
    spec.solver = requireString(document, "solver");
    spec.turbulence_model = requireString(document, "turbulence_model");
    if (!compressibility.count(spec.solver))
        throw Error(Errc::UnknownSolver, fmt::format("solver {} has no known compressibility", spec.solver));

    spec.mesh_boundary_names = requireStrings(document, "mesh_boundary_names");
    auto const targets = requireStrings(document, "target_files");
    if (targets.empty())
        violation("target_files", "must not be empty");
    for (auto const& target: targets)
    {
        if (!isSetupPath(target))
            violation("target_files", fmt::format("{} is not a 0/, constant/ or system/ file", target));
        spec.target_files.push_back(rag::SetupDescriptor::file(target));
    }

    if (document.contains("ic_bc"))
    {
        spec.ic_bc = document.at("ic_bc");
        if (!spec.ic_bc.is_object())
            violation("ic_bc", "must be an object");
        for (auto const& [field, patches]: spec.ic_bc.items())
        {
            if (!patches.is_object())
                violation("ic_bc/" + field, "must be an object");
            for (auto const& [patch, condition]: patches.items())
            {
                if (patch == "internalField")
                {
                    if (!condition.is_string())
                        violation("ic_bc/" + field + "/internalField", "must be a string");
                    continue;
                }
                if (!condition.is_object() || !condition.contains("type") || !condition.at("type").is_string())
                    violation("ic_bc/" + field + "/" + patch, "needs a string \"type\"");
                auto const& names = spec.mesh_boundary_names;
                if (std::find(names.begin(), names.end(), patch) == names.end())
                    violation("ic_bc/" + field + "/" + patch, "patch is not in mesh_boundary_names");
            }
        }
    }
    if (document.contains("physical_properties"))
    {
        spec.physical_properties = document.at("physical_properties");
        if (!spec.physical_properties.is_object())
            violation("physical_properties", "must be an object");
    }
    return spec;
}

CaseSpec load_case_spec_file(std::filesystem::path const& path, std::map<std::string, bool> const& compressibility)
{
    auto const text = read_text(path);
    auto document = json {};
    try
    {
        document = json::parse(text);
    }
    catch (nlohmann::json::exception const& error)
    {
        throw Error(Errc::SchemaViolation, fmt::format("{}: {}", path.string(), error.what()));
    }
    return load_case_spec(document, compressibility);
}

} // namespace foamrag::agent

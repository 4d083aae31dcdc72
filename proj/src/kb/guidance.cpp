// SPDX-License-Identifier: Apache-2.0
#include <foamrag/io.hpp>
#include <foamrag/kb.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace foamrag::kb
{

namespace fs = std::filesystem;

namespace
{

[[noreturn]] void malformed(GuidanceDocument const& doc, std::string_view what)
{
    throw Error(Errc::MalformedGuidance, fmt::format("{}: {}", doc.id, what));
}

std::string optionalString(GuidanceDocument const& doc, nlohmann::json const& object, char const* key, std::string fallback)
{
    if (!object.contains(key))
        return fallback;
    if (!object.at(key).is_string())
        malformed(doc, fmt::format("'{}' must be a string", key));
    return object.at(key).get<std::string>();
}

GuidanceEntry parseEntry(GuidanceDocument const& doc)
{
    auto const& json = doc.content;
    if (!json.is_object())
        malformed(doc, "document is not an object");
    if (!json.contains("boundary_type") || !json.at("boundary_type").is_string()
        || json.at("boundary_type").get<std::string>().empty())
        malformed(doc, "missing boundary_type");

    auto entry = GuidanceEntry {};
    entry.boundary_type = json.at("boundary_type").get<std::string>();
    entry.source = optionalString(doc, json, "source", "");
    if (!json.contains("required_parameters"))
        return entry;
    if (!json.at("required_parameters").is_array())
        malformed(doc, "required_parameters must be an array");
    for (auto const& item: json.at("required_parameters"))
    {
        if (!item.is_object() || !item.contains("name") || !item.at("name").is_string())
            malformed(doc, "every required parameter needs a name");
        entry.required_parameters.push_back(GuidanceParameter {
            item.at("name").get<std::string>(),
            optionalString(doc, item, "condition", "always"),
            optionalString(doc, item, "description", ""),
        });
    }
    return entry;
}

} // namespace

bool parameter_applies(GuidanceParameter const& parameter, bool compressible)
{
    if (parameter.condition == "compressible only")
        return compressible;
    if (parameter.condition == "incompressible only")
        return !compressible;
    return true;
}

GuidanceStore ingest_guidance(std::vector<GuidanceDocument> const& documents)
{
    auto store = GuidanceStore {};
    for (auto const& doc: documents)
    {
        auto entry = parseEntry(doc);
        auto const [it, inserted] = store.emplace(entry.boundary_type, entry);
        if (inserted)
            continue;
        auto& merged = it->second;
        for (auto const& parameter: entry.required_parameters)
        {
            auto const known = std::any_of(merged.required_parameters.begin(), merged.required_parameters.end(),
                                           [&](GuidanceParameter const& p) { return p.name == parameter.name; });
            if (!known)
                merged.required_parameters.push_back(parameter);
        }
        if (!entry.source.empty() && merged.source.find(entry.source) == std::string::npos)
            merged.source = merged.source.empty() ? entry.source : merged.source + "; " + entry.source;
    }
    return store;
}

std::vector<GuidanceDocument> load_guidance_documents(fs::path const& dir)
{
    auto paths = std::vector<fs::path> {};
    if (!fs::is_directory(dir))
        throw Error(Errc::Io, fmt::format("guidance directory '{}' does not exist", dir.generic_string()));
    for (auto const& item: fs::directory_iterator(dir))
        if (item.is_regular_file() && item.path().extension() == ".json")
            paths.push_back(item.path());
    std::sort(paths.begin(), paths.end());

    auto documents = std::vector<GuidanceDocument> {};
    for (auto const& path: paths)
    {
        auto const name = path.filename().string();
        auto json = nlohmann::json::parse(read_text(path), nullptr, false);
        if (json.is_discarded())
            throw Error(Errc::MalformedGuidance, fmt::format("{}: not valid JSON", name));
        if (json.is_array())
        {
            for (std::size_t i = 0; i < json.size(); ++i)
                documents.push_back(GuidanceDocument { fmt::format("{}[{}]", name, i), json[i] });
        }
        else
        {
            documents.push_back(GuidanceDocument { name, std::move(json) });
        }
    }
    return documents;
}

} // namespace foamrag::kb

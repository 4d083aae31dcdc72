// SPDX-License-Identifier: Apache-2.0
#include <foamrag/io.hpp>
#include <foamrag/kb.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace foamrag::kb
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace
{

std::set<std::size_t> const& lookup(std::map<std::string, std::set<std::size_t>> const& index, std::string const& key)
{
    static auto const empty = std::set<std::size_t> {};
    auto const it = index.find(key);
    return it == index.end() ? empty : it->second;
}

std::vector<fs::path> discoverCases(fs::path const& root)
{
    auto cases = std::vector<fs::path> {};
    if (fs::is_directory(root / "system"))
    {
        cases.push_back(root);
        return cases;
    }
    auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
    for (; it != fs::recursive_directory_iterator(); ++it)
    {
        if (!it->is_directory())
            continue;
        auto const name = it->path().filename().string();
        if (!name.empty() && name.front() == '.')
        {
            it.disable_recursion_pending();
            continue;
        }
        if (fs::is_directory(it->path() / "system"))
        {
            cases.push_back(it->path());
            it.disable_recursion_pending();
        }
    }
    std::sort(cases.begin(), cases.end(),
              [](fs::path const& a, fs::path const& b) { return a.generic_string() < b.generic_string(); });
    return cases;
}

std::string applicationOf(CaseFiles const& files)
{
    auto const it = files.find("system/controlDict");
    if (it == files.end())
        return {};
    auto const* node = it->second.find("application");
    return node ? node->text() : std::string {};
}

void assignCaseIds(std::vector<CaseRecord>& records)
{
    auto counts = std::map<std::string, int> {};
    for (auto const& record: records)
        ++counts[fs::path(record.case_path).filename().string()];
    for (auto& record: records)
    {
        auto const path = fs::path(record.case_path);
        auto const name = path.filename().string();
        record.case_id = counts[name] > 1 ? name + "@" + path.parent_path().generic_string() : name;
    }
}

json optionalText(std::optional<std::string> const& value)
{
    return value ? json(*value) : json(nullptr);
}

[[noreturn]] void schema(std::string const& what)
{
    throw Error(Errc::SchemaViolation, what);
}

json const& member(json const& object, char const* key, std::string const& context)
{
    if (!object.is_object() || !object.contains(key))
        schema(fmt::format("{}: missing '{}'", context, key));
    return object.at(key);
}

std::string stringMember(json const& object, char const* key, std::string const& context)
{
    auto const& value = member(object, key, context);
    if (!value.is_string())
        schema(fmt::format("{}: '{}' must be a string", context, key));
    return value.get<std::string>();
}

bool boolMember(json const& object, char const* key, std::string const& context)
{
    auto const& value = member(object, key, context);
    if (!value.is_boolean())
        schema(fmt::format("{}: '{}' must be a boolean", context, key));
    return value.get<bool>();
}

std::optional<std::string> nullableString(json const& object, char const* key, std::string const& context)
{
    auto const& value = member(object, key, context);
    if (value.is_null())
        return std::nullopt;
    if (!value.is_string())
        schema(fmt::format("{}: '{}' must be a string or null", context, key));
    return value.get<std::string>();
}

} // namespace

KnowledgeBase::KnowledgeBase(std::vector<CaseRecord> cases, GuidanceStore guidance, std::map<std::string, bool> compressibility):
    _cases(std::move(cases)), _guidance(std::move(guidance)), _compressibility(std::move(compressibility))
{
    std::sort(_cases.begin(), _cases.end(), [](CaseRecord const& a, CaseRecord const& b) { return a.case_path < b.case_path; });
    for (std::size_t i = 0; i < _cases.size(); ++i)
    {
        auto const& f = _cases[i].features;
        _bySolver[f.solver].insert(i);
        _byTurbulence[f.turbulence_model].insert(i);
        (f.compressible ? _compressibleCases : _incompressibleCases).insert(i);
        for (auto const& type: f.boundary_types)
            _byBoundary[type].insert(i);
        for (auto const& [path, tree]: _cases[i].files)
            _byFile[path].insert(i);
    }
}

CaseRecord const* KnowledgeBase::find_case(std::string_view case_id) const
{
    auto const it = std::find_if(_cases.begin(), _cases.end(), [&](CaseRecord const& c) { return c.case_id == case_id; });
    return it == _cases.end() ? nullptr : &*it;
}

GuidanceEntry const* KnowledgeBase::find_guidance(std::string_view boundary_type) const
{
    auto const it = _guidance.find(std::string(boundary_type));
    return it == _guidance.end() ? nullptr : &it->second;
}

bool KnowledgeBase::compressible(std::string const& solver) const
{
    if (auto const it = _compressibility.find(solver); it != _compressibility.end())
        return it->second;
    return infer_compressibility(solver);
}

std::set<std::size_t> const& KnowledgeBase::by_solver(std::string const& solver) const
{
    return lookup(_bySolver, solver);
}

std::set<std::size_t> const& KnowledgeBase::by_turbulence(std::string const& model) const
{
    return lookup(_byTurbulence, model);
}

std::set<std::size_t> const& KnowledgeBase::by_compressible(bool compressible) const
{
    return compressible ? _compressibleCases : _incompressibleCases;
}

std::set<std::size_t> const& KnowledgeBase::by_boundary_type(std::string const& type) const
{
    return lookup(_byBoundary, type);
}

std::set<std::size_t> const& KnowledgeBase::by_file(std::string const& path) const
{
    return lookup(_byFile, path);
}

BuildResult build_kb(fs::path const& corpus_root, std::vector<GuidanceDocument> const& guidance)
{
    if (!fs::is_directory(corpus_root))
        throw Error(Errc::Io, fmt::format("corpus root '{}' does not exist", corpus_root.generic_string()));

    auto result = BuildResult {};
    auto store = ingest_guidance(guidance);

    struct Pending
    {
        std::string case_path;
        CaseFiles files;
    };
    auto pending = std::vector<Pending> {};
    auto evidence = CompressibilityEvidence {};
    for (auto const& dir: discoverCases(corpus_root))
    {
        auto casePath = relative_slash_path(dir, corpus_root);
        if (casePath == ".")
            casePath = dir.filename().generic_string();
        try
        {
            auto normalized = normalize_case(dir);
            evidence[applicationOf(normalized.files)].push_back(casePath);
            pending.push_back(Pending { casePath, std::move(normalized.files) });
        }
        catch (Error const& e)
        {
            result.excluded.push_back(Exclusion { casePath, e.code(), e.what() });
        }
    }

    auto records = std::vector<CaseRecord> {};
    for (auto& item: pending)
    {
        try
        {
            auto features = identify_features(item.files, evidence);
            records.push_back(CaseRecord { {}, item.case_path, std::move(item.files), std::move(features) });
        }
        catch (Error const& e)
        {
            result.excluded.push_back(Exclusion { item.case_path, e.code(), e.what() });
        }
    }
    if (records.empty())
        throw Error(Errc::EmptyCorpus, fmt::format("no usable case under '{}'", corpus_root.generic_string()));
    assignCaseIds(records);

    auto compressibility = builtin_compressibility();
    for (auto const& record: records)
        compressibility[record.features.solver] = record.features.compressible;

    std::sort(result.excluded.begin(), result.excluded.end(),
              [](Exclusion const& a, Exclusion const& b) { return a.case_path < b.case_path; });
    result.kb = KnowledgeBase(std::move(records), std::move(store), std::move(compressibility));
    return result;
}

json record_to_json(CaseRecord const& record)
{
    auto const& f = record.features;
    auto files = json::object();
    for (auto const& [path, tree]: record.files)
        files[path] = dict::to_json(tree);
    auto types = json::array();
    for (auto const& type: f.boundary_types)
        types.push_back(type);
    return json {
        { "case_path", record.case_path },
        { "configuration_files", std::move(files) },
        { "solver", f.solver },
        { "turbulence_model", f.turbulence_model },
        { "compressible", f.compressible },
        { "turbulence_type", f.turbulence_type },
        { "thermophysicalModel", optionalText(f.aux.thermophysicalModel) },
        { "singlePhase", f.aux.singlePhase },
        { "particle_flow", f.aux.particle_flow },
        { "reacting_flow", f.aux.reacting_flow },
        { "ddtScheme", optionalText(f.aux.ddtScheme) },
        { "boundary_type", std::move(types) },
    };
}

json guidance_to_json(GuidanceEntry const& entry)
{
    auto parameters = json::array();
    for (auto const& p: entry.required_parameters)
        parameters.push_back(json { { "name", p.name }, { "condition", p.condition }, { "description", p.description } });
    return json {
        { "boundary_type", entry.boundary_type },
        { "required_parameters", std::move(parameters) },
        { "source", entry.source },
    };
}

json kb_to_json(KnowledgeBase const& kb)
{
    auto root = json::object();
    for (auto const& record: kb.cases())
        root[record.case_id] = record_to_json(record);
    auto guidance = json::object();
    for (auto const& [type, entry]: kb.guidance())
        guidance[type] = guidance_to_json(entry);
    root["__guidance__"] = std::move(guidance);
    auto compressibility = json::object();
    for (auto const& [solver, flag]: kb.solver_compressibility())
        compressibility[solver] = flag;
    root["__solver_compressibility__"] = std::move(compressibility);
    return root;
}

std::string serialize_kb(KnowledgeBase const& kb)
{
    return kb_to_json(kb).dump(4) + "\n";
}

KnowledgeBase kb_from_json(json const& root)
{
    if (!root.is_object())
        schema("knowledge base must be a JSON object");

    auto records = std::vector<CaseRecord> {};
    auto store = GuidanceStore {};
    auto compressibility = std::map<std::string, bool> {};
    for (auto const& [key, value]: root.items())
    {
        if (key == "__guidance__")
        {
            auto documents = std::vector<GuidanceDocument> {};
            for (auto const& [type, entry]: value.items())
                documents.push_back(GuidanceDocument { "__guidance__." + type, nlohmann::json::parse(entry.dump()) });
            try
            {
                store = ingest_guidance(documents);
            }
            catch (Error const& e)
            {
                schema(e.what());
            }
            continue;
        }
        if (key == "__solver_compressibility__")
        {
            for (auto const& [solver, flag]: value.items())
            {
                if (!flag.is_boolean())
                    schema(fmt::format("__solver_compressibility__.{} must be a boolean", solver));
                compressibility[solver] = flag.get<bool>();
            }
            continue;
        }

        auto record = CaseRecord {};
        record.case_id = key;
        record.case_path = stringMember(value, "case_path", key);
        auto const& files = member(value, "configuration_files", key);
        if (!files.is_object())
            schema(fmt::format("{}: configuration_files must be an object", key));
        for (auto const& [path, content]: files.items())
            record.files.emplace(path, dict::tree_from_json(content));

        auto& f = record.features;
        f.solver = stringMember(value, "solver", key);
        f.turbulence_model = stringMember(value, "turbulence_model", key);
        f.compressible = boolMember(value, "compressible", key);
        f.turbulence_type = stringMember(value, "turbulence_type", key);
        f.aux.thermophysicalModel = nullableString(value, "thermophysicalModel", key);
        f.aux.singlePhase = boolMember(value, "singlePhase", key);
        f.aux.particle_flow = boolMember(value, "particle_flow", key);
        f.aux.reacting_flow = boolMember(value, "reacting_flow", key);
        f.aux.ddtScheme = nullableString(value, "ddtScheme", key);
        auto const& types = member(value, "boundary_type", key);
        if (!types.is_array())
            schema(fmt::format("{}: boundary_type must be an array", key));
        for (auto const& type: types)
        {
            if (!type.is_string())
                schema(fmt::format("{}: boundary_type entries must be strings", key));
            f.boundary_types.insert(type.get<std::string>());
        }
        records.push_back(std::move(record));
    }
    return KnowledgeBase(std::move(records), std::move(store), std::move(compressibility));
}

KnowledgeBase load_kb(fs::path const& path)
{
    auto document = json::parse(read_text(path), nullptr, false);
    if (document.is_discarded())
        throw Error(Errc::SchemaViolation, fmt::format("'{}' is not valid JSON", path.generic_string()));
    return kb_from_json(document);
}

} // namespace foamrag::kb

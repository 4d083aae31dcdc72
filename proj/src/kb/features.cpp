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

bool startsWith(std::string_view text, std::string_view prefix)
{
    return text.substr(0, prefix.size()) == prefix;
}

bool endsWith(std::string_view text, std::string_view suffix)
{
    return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
}

// Grid-generation and parallel-decomposition dictionaries carry no physics.
bool isExcludedFile(std::string_view name)
{
    return name == "blockMeshDict" || name == "decomposeParDict";
}

std::optional<std::string> textAt(dict::Dictionary const* dict, std::string_view key)
{
    if (!dict)
        return std::nullopt;
    auto const* node = dict->find(key);
    if (!node || !node->is_scalar())
        return std::nullopt;
    auto text = dict::node_text(*node);
    if (!node->text().empty())
        text = node->text();
    return text;
}

dict::ConfigTree const* findFile(CaseFiles const& files, std::string const& path)
{
    auto const it = files.find(path);
    return it == files.end() ? nullptr : &it->second;
}

bool stripNode(dict::ConfigNode& node)
{
    if (node.is_scalar())
    {
        auto const* run = std::get_if<dict::TokenRun>(&node.as_scalar());
        auto const* word = std::get_if<dict::Word>(&node.as_scalar());
        auto const text = run ? run->text : word ? word->text : std::string {};
        return text == "nonuniform" || startsWith(text, "nonuniform ");
    }
    if (node.is_dict())
        strip_nonuniform(node.as_dict());
    return false;
}

} // namespace

std::map<std::string, bool> const& builtin_compressibility()
{
    static auto const table = std::map<std::string, bool> {
        { "icoFoam", false },
        { "simpleFoam", false },
        { "pimpleFoam", false },
        { "pisoFoam", false },
        { "SRFSimpleFoam", false },
        { "SRFPimpleFoam", false },
        { "porousSimpleFoam", false },
        { "nonNewtonianIcoFoam", false },
        { "rhoCentralFoam", true },
        { "sonicFoam", true },
        { "rhoSimpleFoam", true },
        { "rhoPimpleFoam", true },
        { "rhoPorousSimpleFoam", true },
    };
    return table;
}

bool infer_compressibility(std::string const& solver, CompressibilityEvidence const& evidence)
{
    if (solver.empty())
        throw Error(Errc::UnknownSolver, "empty solver name");

    auto compressiblePath = std::optional<std::string> {};
    auto incompressiblePath = std::optional<std::string> {};
    if (auto const it = evidence.find(solver); it != evidence.end())
    {
        for (auto const& path: it->second)
        {
            if (startsWith(path, "compressible/") && !compressiblePath)
                compressiblePath = path;
            else if (startsWith(path, "incompressible/") && !incompressiblePath)
                incompressiblePath = path;
        }
    }
    if (compressiblePath && incompressiblePath)
        throw Error(Errc::ConflictingEvidence,
                    fmt::format("solver '{}' appears under both '{}' and '{}'", solver, *compressiblePath, *incompressiblePath));
    if (compressiblePath)
        return true;
    if (incompressiblePath)
        return false;

    auto const& table = builtin_compressibility();
    if (auto const it = table.find(solver); it != table.end())
        return it->second;
    throw Error(Errc::UnknownSolver, fmt::format("no compressibility evidence for solver '{}'", solver));
}

void strip_nonuniform(dict::Dictionary& tree)
{
    for (auto& entry: tree)
    {
        if (stripNode(entry.value))
            entry.value = dict::ConfigNode { dict::Scalar { dict::TokenRun { std::string(NonuniformPlaceholder) } } };
    }
}

NormalizedCase normalize_case(fs::path const& case_dir)
{
    if (!fs::is_regular_file(case_dir / "system" / "controlDict"))
        throw Error(Errc::MissingControlDict, fmt::format("'{}' has no system/controlDict", case_dir.generic_string()));

    auto timeDir = std::string("0");
    if (!fs::is_directory(case_dir / "0") && fs::is_directory(case_dir / "0.orig"))
        timeDir = "0.orig";

    auto result = NormalizedCase {};
    for (auto const& [dirName, key]: { std::pair { timeDir, std::string("0") },
                                        std::pair { std::string("constant"), std::string("constant") },
                                        std::pair { std::string("system"), std::string("system") } })
    {
        auto const dir = case_dir / dirName;
        if (!fs::is_directory(dir))
            continue;
        auto names = std::vector<std::string> {};
        for (auto const& item: fs::directory_iterator(dir))
        {
            auto const name = item.path().filename().string();
            if (item.is_regular_file() && !startsWith(name, "."))
                names.push_back(name);
        }
        std::sort(names.begin(), names.end());
        for (auto const& name: names)
        {
            auto const rel = key + "/" + name;
            if (isExcludedFile(name))
            {
                result.excluded_files.push_back(rel);
                continue;
            }
            try
            {
                auto tree = dict::parse_dictionary(read_text(dir / name)).tree;
                strip_nonuniform(tree);
                result.files.emplace(rel, std::move(tree));
            }
            catch (Error const& e)
            {
                throw Error(Errc::ParseFailure, fmt::format("{}: {}", rel, e.what()));
            }
        }
    }
    return result;
}

PhysicsFeatures identify_features(CaseFiles const& files, CompressibilityEvidence const& evidence)
{
    auto const* control = findFile(files, "system/controlDict");
    if (!control)
        throw Error(Errc::MissingControlDict, "files contain no system/controlDict");

    auto features = PhysicsFeatures {};
    auto const application = textAt(control, "application");
    if (!application || application->empty())
        throw Error(Errc::MissingApplication, "controlDict has no 'application' entry");
    features.solver = *application;
    features.compressible = infer_compressibility(features.solver, evidence);

    auto const* turbulence = findFile(files, "constant/turbulenceProperties");
    if (!turbulence)
        turbulence = findFile(files, "constant/momentumTransport");
    if (turbulence)
    {
        auto const type = textAt(turbulence, "simulationType").value_or("laminar");
        if (type == "RAS" || type == "LES")
        {
            features.turbulence_type = type;
            auto const* coeffs = turbulence->find_dict(type);
            auto model = textAt(coeffs, type + "Model");
            if (!model)
                model = textAt(coeffs, "model");
            features.turbulence_model = model.value_or("laminar");
        }
    }

    for (auto const& [path, tree]: files)
    {
        if (!startsWith(path, "0/"))
            continue;
        auto const* boundary = tree.find_dict("boundaryField");
        if (!boundary)
            continue;
        for (auto const& patch: *boundary)
        {
            if (!patch.value.is_dict())
                continue;
            if (auto const type = textAt(&patch.value.as_dict(), "type"))
                features.boundary_types.insert(*type);
        }
    }

    auto& aux = features.aux;
    if (auto const* thermo = findFile(files, "constant/thermophysicalProperties"))
        aux.thermophysicalModel = textAt(thermo->find_dict("thermoType"), "type");
    aux.singlePhase = std::none_of(files.begin(), files.end(), [](auto const& f) { return startsWith(f.first, "0/alpha."); });
    aux.particle_flow = std::any_of(files.begin(), files.end(), [](auto const& f) {
        return startsWith(f.first, "constant/") && endsWith(f.first, "CloudProperties");
    });
    aux.reacting_flow = files.count("constant/reactions") > 0 || files.count("constant/combustionProperties") > 0;
    if (auto const* schemes = findFile(files, "system/fvSchemes"))
        aux.ddtScheme = textAt(schemes->find_dict("ddtSchemes"), "default");
    return features;
}

} // namespace foamrag::kb

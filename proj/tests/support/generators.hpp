// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded generators for synthetic knowledge bases and retrieval queries, plus
// brute-force reference implementations the retrievers are checked against.

#include <foamrag/kb.hpp>
#include <foamrag/rag.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace foamrag::test
{

using Rng = std::mt19937;

template<typename T>
T const& pick(Rng& rng, std::vector<T> const& pool)
{
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

inline bool coin(Rng& rng, double p = 0.5)
{
    return std::bernoulli_distribution(p)(rng);
}

inline std::map<std::string, bool> const& synthetic_solvers()
{
    static std::map<std::string, bool> const table { { "icoFoam", false },      { "simpleFoam", false },
                                                     { "pimpleFoam", false },   { "rhoSimpleFoam", true },
                                                     { "rhoPimpleFoam", true }, { "sonicFoam", true } };
    return table;
}

inline std::vector<std::string> synthetic_solver_names()
{
    auto names = std::vector<std::string> {};
    for (auto const& [name, _]: synthetic_solvers())
        names.push_back(name);
    return names;
}

inline std::vector<std::string> const& synthetic_turbulence()
{
    static std::vector<std::string> const pool { "laminar", "kEpsilon", "kOmegaSST", "SpalartAllmaras" };
    return pool;
}

inline std::vector<std::string> const& synthetic_boundary_types()
{
    static std::vector<std::string> const pool { "fixedValue", "zeroGradient", "totalPressure", "noSlip", "inletOutlet" };
    return pool;
}

inline std::vector<std::string> const& synthetic_files()
{
    static std::vector<std::string> const pool { "system/fvSchemes", "system/fvSolution", "constant/transportProperties",
                                                  "constant/thermophysicalProperties", "0/U", "0/p" };
    return pool;
}

inline std::vector<std::string> const& solver_blocks()
{
    static std::vector<std::string> const pool {
        "{ solver GAMG; smoother GaussSeidel; tolerance 1e-06; relTol 0.01; }",
        "{ solver GAMG; smoother DICGaussSeidel; tolerance 1e-06; relTol 0.05; }",
        "{ solver PCG; preconditioner DIC; tolerance 1e-06; relTol 0; }",
        "{ solver smoothSolver; smoother symGaussSeidel; tolerance 1e-05; relTol 0.1; }",
        "{ solver PBiCGStab; preconditioner DILU; tolerance 1e-08; relTol 0; }",
    };
    return pool;
}

inline std::vector<std::string> const& solved_fields()
{
    static std::vector<std::string> const pool { "p", "U", "k", "epsilon", "omega", "rho", "e", "nuTilda" };
    return pool;
}

inline dict::ConfigNode value(std::string const& text)
{
    return dict::parse_value(text);
}

inline dict::ConfigTree random_fv_solution(Rng& rng)
{
    auto solvers = dict::Dictionary {};
    for (auto const& field: solved_fields())
        if (coin(rng, 0.6))
            solvers.set(field, value(pick(rng, solver_blocks())));
    auto tree = dict::ConfigTree {};
    tree.set("solvers", dict::ConfigNode { std::move(solvers) });
    auto algorithm = dict::Dictionary {};
    algorithm.set("nNonOrthogonalCorrectors", value(fmt::format("{}", std::uniform_int_distribution<int>(0, 2)(rng))));
    if (coin(rng))
        algorithm.set("consistent", value(coin(rng) ? "yes" : "no"));
    tree.set(coin(rng) ? "SIMPLE" : "PIMPLE", dict::ConfigNode { std::move(algorithm) });
    if (coin(rng, 0.4))
        tree.set("relaxationFactors", value("{ equations { U 0.7; \".*\" 0.7; } }"));
    return tree;
}

inline dict::ConfigTree random_fv_schemes(Rng& rng)
{
    static std::vector<std::string> const divs { "Gauss upwind", "bounded Gauss upwind", "Gauss linear",
                                                 "bounded Gauss linearUpwind limited" };
    auto div = dict::Dictionary {};
    div.set("default", value("none"));
    div.set("div(phi,U)", value(pick(rng, divs)));
    if (coin(rng))
        div.set("div(phi,epsilon)", value(pick(rng, divs)));
    auto tree = dict::ConfigTree {};
    tree.set("ddtSchemes", value(coin(rng) ? "{ default steadyState; }" : "{ default Euler; }"));
    tree.set("divSchemes", dict::ConfigNode { std::move(div) });
    return tree;
}

inline dict::ConfigTree random_field(Rng& rng, std::set<std::string>& types)
{
    auto boundary = dict::Dictionary {};
    auto const patches = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < patches; ++i)
    {
        auto const& type = pick(rng, synthetic_boundary_types());
        types.insert(type);
        boundary.set(fmt::format("patch{}", i), value(fmt::format("{{ type {}; value uniform 0; }}", type)));
    }
    auto tree = dict::ConfigTree {};
    tree.set("dimensions", value("[0 1 -1 0 0 0 0]"));
    tree.set("internalField", value("uniform 0"));
    tree.set("boundaryField", dict::ConfigNode { std::move(boundary) });
    return tree;
}

inline kb::CaseRecord random_case(Rng& rng, std::size_t index)
{
    auto record = kb::CaseRecord {};
    record.case_id = fmt::format("case{:03}", index);
    record.case_path = fmt::format("synthetic/{}", record.case_id);
    auto& f = record.features;
    f.solver = pick(rng, synthetic_solver_names());
    f.compressible = synthetic_solvers().at(f.solver);
    f.turbulence_model = pick(rng, synthetic_turbulence());
    f.turbulence_type = f.turbulence_model == "laminar" ? "laminar" : "RAS";

    auto control = dict::ConfigTree {};
    control.set("application", value(f.solver));
    control.set("endTime", value(fmt::format("{}", std::uniform_int_distribution<int>(1, 4)(rng) * 100)));
    record.files["system/controlDict"] = std::move(control);
    for (auto const& file: synthetic_files())
    {
        if (!coin(rng, 0.7))
            continue;
        if (file == "system/fvSolution")
            record.files[file] = random_fv_solution(rng);
        else if (file == "system/fvSchemes")
            record.files[file] = random_fv_schemes(rng);
        else if (file.rfind("0/", 0) == 0)
            record.files[file] = random_field(rng, f.boundary_types);
        else
        {
            auto tree = dict::ConfigTree {};
            tree.set("transportModel", value("Newtonian"));
            record.files[file] = std::move(tree);
        }
    }
    return record;
}

inline kb::KnowledgeBase random_kb(Rng& rng, std::size_t min_cases = 3, std::size_t max_cases = 24)
{
    auto const count = std::uniform_int_distribution<std::size_t>(min_cases, max_cases)(rng);
    auto cases = std::vector<kb::CaseRecord> {};
    for (std::size_t i = 0; i < count; ++i)
        cases.push_back(random_case(rng, i));
    return kb::KnowledgeBase(std::move(cases), {}, synthetic_solvers());
}

inline rag::SetupDescriptor random_target(Rng& rng)
{
    if (coin(rng, 0.3))
        return rag::SetupDescriptor::boundary(pick(rng, synthetic_boundary_types()));
    return rag::SetupDescriptor::file(pick(rng, synthetic_files()));
}

// Reference implementations -------------------------------------------------

struct Constraint
{
    bool solver;
    bool turbulence;
    bool compressible;
};

/// The six cascading levels, q1..q6.
inline std::vector<Constraint> const& cascading_levels()
{
    static std::vector<Constraint> const levels {
        { true, true, false }, { true, false, false }, { false, true, true },
        { false, true, false }, { false, false, true }, { false, false, false },
    };
    return levels;
}

/// Number of context items a case contributes for a target, by direct scan.
inline std::size_t reference_item_count(kb::CaseRecord const& record, rag::SetupDescriptor const& target)
{
    if (target.is_file())
        return record.files.count(target.target);
    auto count = std::size_t { 0 };
    for (auto const& [path, tree]: record.files)
    {
        if (path.rfind("0/", 0) != 0)
            continue;
        auto const* boundary = tree.find_dict("boundaryField");
        if (!boundary)
            continue;
        for (auto const& patch: *boundary)
            if (patch.value.is_dict() && patch.value.as_dict().find("type")
                && patch.value.as_dict().find("type")->text() == target.target)
                ++count;
    }
    return count;
}

struct ReferenceOutcome
{
    std::optional<int> level;
    std::vector<std::string> case_ids; ///< after truncation to n_max items
    std::size_t item_count = 0;
};

/// Brute-force cascading retrieval over the raw records.
inline ReferenceOutcome reference_cascade(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                                          rag::SetupDescriptor const& target, std::size_t n_max)
{
    auto const comp = synthetic_solvers().count(solver) ? synthetic_solvers().at(solver) : kb.compressible(solver);
    auto records = std::vector<kb::CaseRecord const*> {};
    for (auto const& record: kb.cases())
        records.push_back(&record);
    std::sort(records.begin(), records.end(), [](auto const* a, auto const* b) { return a->case_id < b->case_id; });

    auto const& levels = cascading_levels();
    for (std::size_t l = 0; l < levels.size(); ++l)
    {
        auto const& c = levels[l];
        auto outcome = ReferenceOutcome {};
        for (auto const* record: records)
        {
            auto const& f = record->features;
            if ((c.solver && f.solver != solver) || (c.turbulence && f.turbulence_model != turbulence)
                || (c.compressible && f.compressible != comp))
                continue;
            auto const n = reference_item_count(*record, target);
            for (std::size_t i = 0; i < n && outcome.item_count < n_max; ++i)
            {
                if (outcome.case_ids.empty() || outcome.case_ids.back() != record->case_id)
                    outcome.case_ids.push_back(record->case_id);
                ++outcome.item_count;
            }
            if (n > 0)
                outcome.level = static_cast<int>(l) + 1;
        }
        if (outcome.level)
        {
            outcome.level = static_cast<int>(l) + 1;
            return outcome;
        }
    }
    return {};
}

} // namespace foamrag::test

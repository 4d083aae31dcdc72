// SPDX-License-Identifier: Apache-2.0
#pragma once

// Symbolic knowledge base: one record per tutorial case, holding its parsed
// configuration files and the physics features used as retrieval keys, plus a
// store of boundary-condition guidance.

#include <foamrag/foamdict.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace foamrag::kb
{

struct AuxTags
{
    std::optional<std::string> thermophysicalModel;
    bool singlePhase = true;
    bool particle_flow = false;
    bool reacting_flow = false;
    std::optional<std::string> ddtScheme;

    bool operator==(AuxTags const&) const = default;
};

struct PhysicsFeatures
{
    std::string solver;
    std::string turbulence_model = "laminar";
    bool compressible = false;
    std::string turbulence_type = "laminar"; ///< RAS, LES or laminar
    std::set<std::string> boundary_types;
    AuxTags aux;

    bool operator==(PhysicsFeatures const&) const = default;
};

/// Relative file path ("system/fvSchemes") to parsed content, ordered by path.
using CaseFiles = std::map<std::string, dict::ConfigTree>;

struct CaseRecord
{
    std::string case_id;
    std::string case_path; ///< corpus-relative, '/' separated
    CaseFiles files;
    PhysicsFeatures features;
};

struct GuidanceParameter
{
    std::string name;
    std::string condition; ///< "always", "compressible only", "incompressible only"
    std::string description;

    bool operator==(GuidanceParameter const&) const = default;
};

/// Whether a parameter's condition holds for the given flow regime.
bool parameter_applies(GuidanceParameter const& parameter, bool compressible);

struct GuidanceEntry
{
    std::string boundary_type;
    std::vector<GuidanceParameter> required_parameters;
    std::string source;

    bool operator==(GuidanceEntry const&) const = default;
};

using GuidanceStore = std::map<std::string, GuidanceEntry>;

struct GuidanceDocument
{
    std::string id; ///< used in MalformedGuidance messages
    nlohmann::json content;
};

/// Builds the store; duplicate boundary types union their parameters by name.
/// Throws Error(MalformedGuidance).
GuidanceStore ingest_guidance(std::vector<GuidanceDocument> const& documents);

/// Reads every *.json file of `dir` (sorted); a file holds one document or an array.
std::vector<GuidanceDocument> load_guidance_documents(std::filesystem::path const& dir);

/// Solver name to the corpus-relative paths of the cases that run it.
using CompressibilityEvidence = std::map<std::string, std::vector<std::string>>;

/// Path evidence first (compressible/ or incompressible/ prefix), then the
/// built-in table. Throws Error(UnknownSolver) or Error(ConflictingEvidence).
bool infer_compressibility(std::string const& solver, CompressibilityEvidence const& evidence = {});

/// The built-in solver table.
std::map<std::string, bool> const& builtin_compressibility();

struct NormalizedCase
{
    CaseFiles files;
    std::vector<std::string> excluded_files;
};

/// Parses the configuration files of one case directory. Throws
/// Error(MissingControlDict) or Error(ParseFailure).
NormalizedCase normalize_case(std::filesystem::path const& case_dir);

/// Replaces every `nonuniform ...` value in the tree with the placeholder.
void strip_nonuniform(dict::Dictionary& tree);

inline constexpr std::string_view NonuniformPlaceholder = "nonuniform <omitted>";

/// Throws Error(MissingApplication), Error(UnknownSolver), Error(ConflictingEvidence).
PhysicsFeatures identify_features(CaseFiles const& files, CompressibilityEvidence const& evidence = {});

class KnowledgeBase
{
public:
    KnowledgeBase() = default;

    /// Takes ownership of the records (sorted by case_path) and builds the indexes.
    KnowledgeBase(std::vector<CaseRecord> cases, GuidanceStore guidance, std::map<std::string, bool> compressibility);

    [[nodiscard]] std::vector<CaseRecord> const& cases() const { return _cases; }
    [[nodiscard]] GuidanceStore const& guidance() const { return _guidance; }
    [[nodiscard]] std::map<std::string, bool> const& solver_compressibility() const { return _compressibility; }

    [[nodiscard]] CaseRecord const* find_case(std::string_view case_id) const;
    [[nodiscard]] GuidanceEntry const* find_guidance(std::string_view boundary_type) const;

    /// Compressibility of a solver; throws Error(UnknownSolver).
    [[nodiscard]] bool compressible(std::string const& solver) const;

    // Exact-match indexes. Each returns positions into cases(), ascending.
    [[nodiscard]] std::set<std::size_t> const& by_solver(std::string const& solver) const;
    [[nodiscard]] std::set<std::size_t> const& by_turbulence(std::string const& model) const;
    [[nodiscard]] std::set<std::size_t> const& by_compressible(bool compressible) const;
    [[nodiscard]] std::set<std::size_t> const& by_boundary_type(std::string const& type) const;
    [[nodiscard]] std::set<std::size_t> const& by_file(std::string const& path) const;

    [[nodiscard]] std::map<std::string, std::set<std::size_t>> const& solver_index() const { return _bySolver; }
    [[nodiscard]] std::map<std::string, std::set<std::size_t>> const& turbulence_index() const { return _byTurbulence; }
    [[nodiscard]] std::map<std::string, std::set<std::size_t>> const& boundary_index() const { return _byBoundary; }
    [[nodiscard]] std::map<std::string, std::set<std::size_t>> const& file_index() const { return _byFile; }

private:
    std::vector<CaseRecord> _cases;
    GuidanceStore _guidance;
    std::map<std::string, bool> _compressibility;
    std::map<std::string, std::set<std::size_t>> _bySolver;
    std::map<std::string, std::set<std::size_t>> _byTurbulence;
    std::map<std::string, std::set<std::size_t>> _byBoundary;
    std::map<std::string, std::set<std::size_t>> _byFile;
    std::set<std::size_t> _compressibleCases;
    std::set<std::size_t> _incompressibleCases;
};

struct Exclusion
{
    std::string case_path;
    Errc code;
    std::string message;
};

struct BuildResult
{
    KnowledgeBase kb;
    std::vector<Exclusion> excluded;
};

/// Walks the corpus (a case is any directory holding system/), normalizes and
/// tags each case. Throws Error(EmptyCorpus) when no case survives.
BuildResult build_kb(std::filesystem::path const& corpus_root, std::vector<GuidanceDocument> const& guidance);

nlohmann::ordered_json record_to_json(CaseRecord const& record);
nlohmann::ordered_json guidance_to_json(GuidanceEntry const& entry);
nlohmann::ordered_json kb_to_json(KnowledgeBase const& kb);

/// KB file text: 4-space indented JSON with a trailing newline.
std::string serialize_kb(KnowledgeBase const& kb);

/// Throws Error(SchemaViolation) on a malformed KB document.
KnowledgeBase kb_from_json(nlohmann::ordered_json const& json);
KnowledgeBase load_kb(std::filesystem::path const& path);

} // namespace foamrag::kb

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic retrieval over a KnowledgeBase: exact-match search, the five
// retrieval strategies, the target-to-strategy dispatcher and audit records.

#include <foamrag/foamdict.hpp>
#include <foamrag/kb.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace foamrag::rag
{

/// Insertion-ordered string map; copyable and assignable.
template<typename T>
class OrderedMap
{
public:
    using value_type = std::pair<std::string, T>;
    using iterator = typename std::vector<value_type>::iterator;
    using const_iterator = typename std::vector<value_type>::const_iterator;

    iterator find(std::string_view key)
    {
        return std::find_if(_items.begin(), _items.end(), [&](value_type const& item) { return item.first == key; });
    }
    const_iterator find(std::string_view key) const
    {
        return std::find_if(_items.begin(), _items.end(), [&](value_type const& item) { return item.first == key; });
    }

    /// Inserts when absent; returns the slot and whether it was inserted.
    std::pair<iterator, bool> emplace(std::string key, T value)
    {
        if (auto it = find(key); it != end())
            return { it, false };
        _items.emplace_back(std::move(key), std::move(value));
        return { std::prev(_items.end()), true };
    }

    T& operator[](std::string const& key) { return emplace(key, T {}).first->second; }
    T const& at(std::string_view key) const
    {
        auto it = find(key);
        if (it == end())
            throw std::out_of_range(std::string(key));
        return it->second;
    }
    [[nodiscard]] bool contains(std::string_view key) const { return find(key) != end(); }

    [[nodiscard]] std::size_t size() const { return _items.size(); }
    [[nodiscard]] bool empty() const { return _items.empty(); }
    iterator begin() { return _items.begin(); }
    iterator end() { return _items.end(); }
    const_iterator begin() const { return _items.begin(); }
    const_iterator end() const { return _items.end(); }

private:
    std::vector<value_type> _items;
};

inline constexpr std::size_t DefaultNMax = 5;
inline constexpr double DefaultTau = 0.3;

enum class DescriptorKind
{
    File,
    BoundaryType,
};

struct SetupDescriptor
{
    DescriptorKind kind = DescriptorKind::File;
    std::string target;

    static SetupDescriptor file(std::string path) { return { DescriptorKind::File, std::move(path) }; }
    static SetupDescriptor boundary(std::string type) { return { DescriptorKind::BoundaryType, std::move(type) }; }

    [[nodiscard]] bool is_file() const { return kind == DescriptorKind::File; }
    bool operator==(SetupDescriptor const&) const = default;
};

nlohmann::ordered_json descriptor_to_json(SetupDescriptor const& descriptor);

struct RetrievalQuery
{
    std::optional<std::string> solver;
    std::optional<std::string> turbulence_model;
    std::optional<bool> compressible;
    std::optional<std::string> keyword;
    SetupDescriptor descriptor;
};

/// Constraint set as JSON, only the present fields, descriptor last.
nlohmann::ordered_json query_to_json(RetrievalQuery const& query);

/// One retrieved fragment. For boundary-type searches `field` and `patch`
/// name where the entry came from; for keyword searches `content` is the
/// single-pair dictionary {keyword: value}.
struct ContextItem
{
    std::string case_id;
    SetupDescriptor descriptor;
    std::string field;
    std::string patch;
    dict::ConfigNode content;

    bool operator==(ContextItem const&) const = default;
};

struct LadderStep
{
    int level = 0;         ///< position in the strategy's full ladder, 1-based
    std::string label;     ///< "q1".."q6", "k1".."k4", "profile"
    std::string branch;    ///< "", "strict", "solver", "turbulence", or "variant N"
    RetrievalQuery query;
    std::size_t hit_count = 0;
};

struct AuditRecord
{
    std::string strategy;
    std::vector<LadderStep> ladder;
    std::optional<std::size_t> winning_step; ///< index into ladder
    std::vector<std::string> result_case_ids;
    std::vector<std::string> notes;

    /// Level of the winning step, if any.
    [[nodiscard]] std::optional<int> winning_level() const;
};

nlohmann::ordered_json audit_to_json(AuditRecord const& audit);

struct ContextSet
{
    std::vector<ContextItem> items;
    std::vector<kb::GuidanceEntry> guidance;
    AuditRecord origin;

    [[nodiscard]] bool empty() const { return items.empty() && guidance.empty(); }
};

/// {"items": [...], "guidance": [...], "audit": {...}}
nlohmann::ordered_json context_to_json(ContextSet const& context);

/// Shape injected into prompts: {"sample_setup_0": ..., "guidance": [...]}; `{}` when empty.
nlohmann::ordered_json context_to_prompt_json(ContextSet const& context);

// Search ------------------------------------------------------------------

/// Exact match on every present feature; results ordered by case_id.
std::vector<ContextItem> search(kb::KnowledgeBase const& kb, RetrievalQuery const& query);

/// First n_max items.
std::vector<ContextItem> downsample(std::vector<ContextItem> items, std::size_t n_max);

/// First occurrence of `key` in depth-first order, as a single-pair dictionary.
std::optional<dict::Dictionary> find_keyword(dict::Dictionary const& tree, std::string_view key);

// Strategies --------------------------------------------------------------

ContextSet cascading_fallback(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                              SetupDescriptor const& target, std::size_t n_max = DefaultNMax);

ContextSet all_model_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                              SetupDescriptor const& target, std::size_t n_max = DefaultNMax);

ContextSet multi_source_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                                 std::string const& boundary_type, std::size_t n_max = DefaultNMax);

/// Keyword variants: k, k without quotes, then also without whitespace.
std::vector<std::string> keyword_variants(std::string const& keyword);

ContextSet keyword_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                            SetupDescriptor const& target, std::string const& keyword, std::size_t n_max = DefaultNMax);

// Profiles and templates ----------------------------------------------------

/// Frequency statistics for one key. Atomic and scalar keys carry `values`;
/// compound blocks carry `children` (whose rates share the same denominator).
struct KeyStat
{
    double rate = 0.0;
    bool compound = false;
    std::string source; ///< feature label the entry was computed for

    struct Value
    {
        dict::ConfigNode value;
        double frequency = 0.0;
    };
    /// canonical JSON of the value -> statistics
    OrderedMap<Value> values;
    OrderedMap<KeyStat> children;
};

struct ProbabilityProfile
{
    std::string feature; ///< e.g. "turbulence model=kEpsilon"
    std::size_t case_count = 0;
    OrderedMap<KeyStat> keys;
};

/// {"feature", "case_count", "rates": {key: rate | {child: rate}}, "block_rates": {...}}
nlohmann::ordered_json profile_to_json(ProbabilityProfile const& profile);

/// Accepts the form written by profile_to_json; "block_rates" is optional
/// (a compound block then takes the largest child rate).
ProbabilityProfile profile_from_json(nlohmann::ordered_json const& json);

enum class Feature
{
    Solver,
    TurbulenceModel,
};

std::string feature_label(Feature feature, std::string const& value);

/// Throws Error(NoMatchingCases).
ProbabilityProfile compute_profile(kb::KnowledgeBase const& kb, Feature feature, std::string const& value,
                                   std::string const& file);

ProbabilityProfile merge_union_max(std::vector<ProbabilityProfile> const& profiles);

struct Provenance
{
    std::string feature;
    double rate = 0.0;
};

struct SetupTemplate
{
    dict::Dictionary entries;
    /// "solvers/p" style key path -> where the entry came from
    OrderedMap<Provenance> provenance;
    AuditRecord audit;
};

nlohmann::ordered_json template_to_json(SetupTemplate const& setup);

/// Throws Error(EmptyTemplate).
SetupTemplate collapse_refine(ProbabilityProfile const& merged, double tau = DefaultTau);

/// Profiles in order [turbulence, solver]. Throws Error(NoMatchingCases), Error(EmptyTemplate).
SetupTemplate template_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                                std::string const& file, double tau = DefaultTau);

// Dispatch ----------------------------------------------------------------

enum class Strategy
{
    CascadingFallback,
    AllModel,
    Template,
    MultiSource,
    Keyword,
};

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);

enum class Phase
{
    Init,
    Reflect,
};

enum class ErrorCategory
{
    FileMissing,
    Dimensional,
    Persistent,
    ComplexConfiguration,
};

enum class ErrorSubType
{
    SetupFormats,
    ICBCs,
    DiscretizationSchemes,
    LinearSolvers,
};

std::string_view to_string(ErrorCategory category);
std::string_view to_string(ErrorSubType sub_type);

/// What the reflection phase routes on.
struct ReflectTarget
{
    ErrorCategory category = ErrorCategory::ComplexConfiguration;
    std::optional<ErrorSubType> sub_type;
    std::string file;
    std::optional<std::string> keyword;
};

struct Route
{
    Strategy strategy = Strategy::CascadingFallback;
    bool regenerate = false; ///< rebuild the file through the initialization path
    std::string note;
};

/// Initialization routing. Throws Error(UnroutableTarget).
Route dispatch_init(SetupDescriptor const& target);

/// Reflection routing. Throws Error(UnroutableTarget).
Route dispatch_reflect(ReflectTarget const& target);

} // namespace foamrag::rag

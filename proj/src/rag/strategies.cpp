// SPDX-License-Identifier: Apache-2.0
#include <foamrag/rag.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace foamrag::rag
{

namespace
{

struct Rung
{
    int level;
    std::string label;
    RetrievalQuery query;
};

// Runs rungs in order and stops at the first one with hits.
std::vector<ContextItem> climb(kb::KnowledgeBase const& kb, std::vector<Rung> const& rungs, std::string const& branch,
                               AuditRecord& audit)
{
    for (auto const& rung: rungs)
    {
        auto hits = search(kb, rung.query);
        audit.ladder.push_back(LadderStep { rung.level, rung.label, branch, rung.query, hits.size() });
        if (!hits.empty())
        {
            if (!audit.winning_step)
                audit.winning_step = audit.ladder.size() - 1;
            return hits;
        }
    }
    return {};
}

RetrievalQuery makeQuery(std::optional<std::string> solver, std::optional<std::string> turbulence,
                         std::optional<bool> compressible, SetupDescriptor const& target)
{
    return RetrievalQuery { std::move(solver), std::move(turbulence), compressible, std::nullopt, target };
}

Rung rung(int level, std::optional<std::string> solver, std::optional<std::string> turbulence,
          std::optional<bool> compressible, SetupDescriptor const& target)
{
    return Rung { level, fmt::format("q{}", level), makeQuery(std::move(solver), std::move(turbulence), compressible, target) };
}

void finish(AuditRecord& audit, std::vector<ContextItem> const& items)
{
    auto ids = std::vector<std::string> {};
    for (auto const& item: items)
        if (ids.empty() || ids.back() != item.case_id)
            ids.push_back(item.case_id);
    audit.result_case_ids = std::move(ids);
}

void noteRelaxation(AuditRecord& audit, LadderStep const& step)
{
    if (step.level == 4 || step.level == 6)
        audit.notes.push_back(fmt::format("{}: compressibility constraint relaxed", step.label));
}

void sortByCase(std::vector<ContextItem>& items)
{
    std::stable_sort(items.begin(), items.end(), [](ContextItem const& a, ContextItem const& b) { return a.case_id < b.case_id; });
}

std::string stripQuotes(std::string text)
{
    text.erase(std::remove_if(text.begin(), text.end(), [](char c) { return c == '"' || c == '\''; }), text.end());
    return text;
}

std::string removeSpaces(std::string text)
{
    text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; }), text.end());
    return text;
}

} // namespace

ContextSet cascading_fallback(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                              SetupDescriptor const& target, std::size_t n_max)
{
    auto const comp = kb.compressible(solver);
    auto const ladder = std::vector<Rung> {
        rung(1, solver, turbulence, std::nullopt, target), rung(2, solver, std::nullopt, std::nullopt, target),
        rung(3, std::nullopt, turbulence, comp, target),   rung(4, std::nullopt, turbulence, std::nullopt, target),
        rung(5, std::nullopt, std::nullopt, comp, target), rung(6, std::nullopt, std::nullopt, std::nullopt, target),
    };

    auto context = ContextSet {};
    context.origin.strategy = "cascading_fallback";
    auto hits = climb(kb, ladder, "", context.origin);
    if (context.origin.winning_step)
        noteRelaxation(context.origin, context.origin.ladder.at(*context.origin.winning_step));
    else
        context.origin.notes.push_back("no ladder level matched");
    if (hits.size() > n_max)
        context.origin.notes.push_back(fmt::format("downsampled {} hits to {}", hits.size(), n_max));
    context.items = downsample(std::move(hits), n_max);
    finish(context.origin, context.items);
    return context;
}

ContextSet all_model_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                              SetupDescriptor const& target, std::size_t n_max)
{
    auto const comp = kb.compressible(solver);
    auto context = ContextSet {};
    auto& audit = context.origin;
    audit.strategy = "all_model";

    auto strict = climb(kb, { rung(1, solver, turbulence, std::nullopt, target) }, "strict", audit);
    if (!strict.empty())
    {
        context.items = downsample(std::move(strict), n_max);
        finish(audit, context.items);
        return context;
    }

    auto const solverBranch = downsample(climb(kb,
                                               { rung(2, solver, std::nullopt, std::nullopt, target),
                                                 rung(5, std::nullopt, std::nullopt, comp, target),
                                                 rung(6, std::nullopt, std::nullopt, std::nullopt, target) },
                                               "solver", audit),
                                         n_max);
    auto const turbulenceBranch = downsample(climb(kb,
                                                   { rung(4, std::nullopt, turbulence, std::nullopt, target),
                                                     rung(6, std::nullopt, std::nullopt, std::nullopt, target) },
                                                   "turbulence", audit),
                                             n_max);
    for (auto const& step: audit.ladder)
        if (step.hit_count > 0 && step.branch != "strict")
            noteRelaxation(audit, step);

    // Union without duplicates, alternating branches so both stay represented
    // when the union exceeds n_max.
    auto seen = std::set<std::tuple<std::string, std::string, std::string>> {};
    auto merged = std::vector<ContextItem> {};
    auto const total = std::max(solverBranch.size(), turbulenceBranch.size());
    for (std::size_t i = 0; i < total && merged.size() < n_max; ++i)
    {
        for (auto const* branch: { &solverBranch, &turbulenceBranch })
        {
            if (i >= branch->size() || merged.size() >= n_max)
                continue;
            auto const& item = (*branch)[i];
            if (seen.insert({ item.case_id, item.field, item.patch }).second)
                merged.push_back(item);
        }
    }
    auto distinct = seen.size();
    for (auto const* branch: { &solverBranch, &turbulenceBranch })
        for (auto const& item: *branch)
            if (!seen.count({ item.case_id, item.field, item.patch }))
            {
                seen.insert({ item.case_id, item.field, item.patch });
                ++distinct;
            }
    if (distinct > merged.size())
        audit.notes.push_back(fmt::format("branch union of {} capped to {}", distinct, n_max));
    if (merged.empty())
        audit.notes.push_back("both branches empty");
    sortByCase(merged);
    context.items = std::move(merged);
    finish(audit, context.items);
    return context;
}

ContextSet multi_source_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                                 std::string const& boundary_type, std::size_t n_max)
{
    auto context = cascading_fallback(kb, solver, turbulence, SetupDescriptor::boundary(boundary_type), n_max);
    context.origin.strategy = "multi_source";
    if (auto const* entry = kb.find_guidance(boundary_type))
    {
        auto const comp = kb.compressible(solver);
        auto filtered = *entry;
        filtered.required_parameters.clear();
        for (auto const& parameter: entry->required_parameters)
            if (kb::parameter_applies(parameter, comp))
                filtered.required_parameters.push_back(parameter);
        context.origin.notes.push_back(fmt::format("guidance for {}: {} of {} parameters apply", boundary_type,
                                                   filtered.required_parameters.size(), entry->required_parameters.size()));
        context.guidance.push_back(std::move(filtered));
    }
    else
    {
        context.origin.notes.push_back(fmt::format("no guidance entry for {}", boundary_type));
    }
    if (context.empty())
        context.origin.notes.push_back("no examples and no guidance");
    return context;
}

std::vector<std::string> keyword_variants(std::string const& keyword)
{
    auto variants = std::vector<std::string> { keyword };
    auto const stripped = stripQuotes(keyword);
    if (stripped != variants.back())
        variants.push_back(stripped);
    auto const compact = removeSpaces(stripped);
    if (compact != variants.back())
        variants.push_back(compact);
    return variants;
}

ContextSet keyword_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                            SetupDescriptor const& target, std::string const& keyword, std::size_t n_max)
{
    auto const comp = kb.compressible(solver);
    auto context = ContextSet {};
    auto& audit = context.origin;
    audit.strategy = "keyword";

    auto const variants = keyword_variants(keyword);
    auto hits = std::vector<ContextItem> {};
    for (std::size_t v = 0; v < variants.size() && hits.empty(); ++v)
    {
        auto const& k = variants[v];
        auto const base = static_cast<int>(v) * 4;
        auto withKeyword = [&](int j, std::optional<std::string> s, std::optional<std::string> t, std::optional<bool> c) {
            auto query = makeQuery(std::move(s), std::move(t), c, target);
            query.keyword = k;
            return Rung { base + j, fmt::format("k{}", j), std::move(query) };
        };
        hits = climb(kb,
                     { withKeyword(1, solver, turbulence, std::nullopt), withKeyword(2, std::nullopt, turbulence, comp),
                       withKeyword(3, std::nullopt, turbulence, std::nullopt),
                       withKeyword(4, std::nullopt, std::nullopt, std::nullopt) },
                     fmt::format("variant {}", v), audit);
    }
    if (!audit.winning_step)
        audit.notes.push_back(fmt::format("keyword {} not found under any variant", keyword));
    if (hits.size() > n_max)
        audit.notes.push_back(fmt::format("downsampled {} hits to {}", hits.size(), n_max));
    context.items = downsample(std::move(hits), n_max);
    finish(audit, context.items);
    return context;
}

} // namespace foamrag::rag

// SPDX-License-Identifier: Apache-2.0
#include <foamrag/rag.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace foamrag::rag
{

using json = nlohmann::ordered_json;

namespace
{

std::set<std::size_t> intersect(std::set<std::size_t> const& a, std::set<std::size_t> const& b)
{
    auto out = std::set<std::size_t> {};
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

std::optional<dict::Dictionary> findIn(dict::ConfigNode const& node, std::string_view key);

std::optional<dict::Dictionary> findInDict(dict::Dictionary const& tree, std::string_view key)
{
    for (auto const& entry: tree)
    {
        if (entry.key == key)
        {
            auto single = dict::Dictionary {};
            single.set(entry.key, entry.value);
            return single;
        }
        if (auto found = findIn(entry.value, key))
            return found;
    }
    return std::nullopt;
}

std::optional<dict::Dictionary> findIn(dict::ConfigNode const& node, std::string_view key)
{
    if (node.is_dict())
        return findInDict(node.as_dict(), key);
    if (node.is_list())
    {
        for (auto const& item: node.as_list().items)
            if (auto found = findIn(item, key))
                return found;
    }
    return std::nullopt;
}

void appendBoundaryHits(kb::CaseRecord const& record, RetrievalQuery const& query, std::vector<ContextItem>& out)
{
    for (auto const& [path, tree]: record.files)
    {
        if (path.rfind("0/", 0) != 0)
            continue;
        auto const* boundary = tree.find_dict("boundaryField");
        if (!boundary)
            continue;
        for (auto const& patch: *boundary)
        {
            if (!patch.value.is_dict())
                continue;
            auto const* type = patch.value.as_dict().find("type");
            if (!type || type->text() != query.descriptor.target)
                continue;
            auto content = patch.value;
            if (query.keyword)
            {
                auto found = find_keyword(patch.value.as_dict(), *query.keyword);
                if (!found)
                    continue;
                content = dict::ConfigNode { std::move(*found) };
            }
            out.push_back(ContextItem { record.case_id, query.descriptor, path.substr(2), patch.key, std::move(content) });
        }
    }
}

} // namespace

json descriptor_to_json(SetupDescriptor const& descriptor)
{
    return json { { "kind", descriptor.is_file() ? "file" : "boundary_type" }, { "target", descriptor.target } };
}

json query_to_json(RetrievalQuery const& query)
{
    auto out = json::object();
    if (query.solver)
        out["solver"] = *query.solver;
    if (query.turbulence_model)
        out["turbulence_model"] = *query.turbulence_model;
    if (query.compressible)
        out["compressible"] = *query.compressible;
    if (query.keyword)
        out["keyword"] = *query.keyword;
    out["descriptor"] = descriptor_to_json(query.descriptor);
    return out;
}

std::optional<int> AuditRecord::winning_level() const
{
    if (!winning_step)
        return std::nullopt;
    return ladder.at(*winning_step).level;
}

json audit_to_json(AuditRecord const& audit)
{
    auto ladder = json::array();
    for (auto const& step: audit.ladder)
    {
        auto item = json { { "level", step.level }, { "label", step.label } };
        if (!step.branch.empty())
            item["branch"] = step.branch;
        item["query"] = query_to_json(step.query);
        item["hit_count"] = step.hit_count;
        ladder.push_back(std::move(item));
    }
    auto const level = audit.winning_level();
    return json {
        { "strategy", audit.strategy },
        { "ladder", std::move(ladder) },
        { "winning_level", level ? json(*level) : json("none") },
        { "result_case_ids", audit.result_case_ids },
        { "notes", audit.notes },
    };
}

json context_to_json(ContextSet const& context)
{
    auto items = json::array();
    for (auto const& item: context.items)
    {
        auto entry = json { { "case_id", item.case_id }, { "descriptor", descriptor_to_json(item.descriptor) } };
        if (!item.field.empty())
        {
            entry["field"] = item.field;
            entry["patch"] = item.patch;
        }
        entry["content"] = dict::to_json(item.content);
        items.push_back(std::move(entry));
    }
    auto guidance = json::array();
    for (auto const& entry: context.guidance)
        guidance.push_back(kb::guidance_to_json(entry));
    return json { { "items", std::move(items) }, { "guidance", std::move(guidance) }, { "audit", audit_to_json(context.origin) } };
}

json context_to_prompt_json(ContextSet const& context)
{
    auto out = json::object();
    for (std::size_t i = 0; i < context.items.size(); ++i)
    {
        auto const& item = context.items[i];
        auto const key = fmt::format("sample_setup_{}", i);
        if (item.field.empty())
            out[key] = dict::to_json(item.content);
        else
            out[key] = json { { "file", "0/" + item.field }, { "patch", item.patch }, { "entry", dict::to_json(item.content) } };
    }
    if (!context.guidance.empty())
    {
        auto guidance = json::array();
        for (auto const& entry: context.guidance)
            guidance.push_back(kb::guidance_to_json(entry));
        out["guidance"] = std::move(guidance);
    }
    return out;
}

std::optional<dict::Dictionary> find_keyword(dict::Dictionary const& tree, std::string_view key)
{
    return findInDict(tree, key);
}

std::vector<ContextItem> search(kb::KnowledgeBase const& kb, RetrievalQuery const& query)
{
    auto const& target = query.descriptor;
    auto candidates = target.is_file() ? kb.by_file(target.target) : kb.by_boundary_type(target.target);
    if (query.solver)
        candidates = intersect(candidates, kb.by_solver(*query.solver));
    if (query.turbulence_model)
        candidates = intersect(candidates, kb.by_turbulence(*query.turbulence_model));
    if (query.compressible)
        candidates = intersect(candidates, kb.by_compressible(*query.compressible));

    auto ordered = std::vector<kb::CaseRecord const*> {};
    for (auto const index: candidates)
        ordered.push_back(&kb.cases()[index]);
    std::sort(ordered.begin(), ordered.end(),
              [](kb::CaseRecord const* a, kb::CaseRecord const* b) { return a->case_id < b->case_id; });

    auto items = std::vector<ContextItem> {};
    for (auto const* record: ordered)
    {
        if (!target.is_file())
        {
            appendBoundaryHits(*record, query, items);
            continue;
        }
        auto const& tree = record->files.at(target.target);
        if (!query.keyword)
        {
            items.push_back(ContextItem { record->case_id, target, {}, {}, dict::ConfigNode { tree } });
            continue;
        }
        if (auto found = find_keyword(tree, *query.keyword))
            items.push_back(ContextItem { record->case_id, target, {}, {}, dict::ConfigNode { std::move(*found) } });
    }
    return items;
}

std::vector<ContextItem> downsample(std::vector<ContextItem> items, std::size_t n_max)
{
    if (items.size() > n_max)
        items.resize(n_max);
    return items;
}

} // namespace foamrag::rag

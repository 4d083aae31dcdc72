// SPDX-License-Identifier: Apache-2.0
#include <foamrag/error.hpp>
#include <foamrag/rag.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace foamrag::rag
{

using json = nlohmann::ordered_json;

namespace
{

bool skippedKey(std::string const& key)
{
    return key == "FoamFile" || key.rfind(dict::RawKeyPrefix, 0) == 0;
}

bool endsWith(std::string const& text, std::string_view suffix)
{
    return text.size() >= suffix.size() && text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// How a top-level key of `file` is profiled: compound blocks are tallied per
// child, everything else as one value.
enum class Shape
{
    Skip,
    Whole,
    Compound,
};

Shape shapeOf(std::string const& file, std::string const& key, dict::ConfigNode const& value)
{
    if (skippedKey(key))
        return Shape::Skip;
    if (endsWith(file, "fvSolution"))
    {
        static std::set<std::string> const blocks { "solvers", "SIMPLE", "PIMPLE", "PISO", "relaxationFactors" };
        return blocks.count(key) && value.is_dict() ? Shape::Compound : Shape::Skip;
    }
    if (endsWith(file, "controlDict"))
        return Shape::Whole;
    return value.is_dict() ? Shape::Compound : Shape::Whole;
}

void tally(KeyStat& stat, dict::ConfigNode const& value)
{
    auto const canonical = dict::canonical_json(value);
    auto it = stat.values.find(canonical);
    if (it == stat.values.end())
        it = stat.values.emplace(canonical, KeyStat::Value { value, 0.0 }).first;
    it->second.frequency += 1.0;
    stat.rate += 1.0;
}

void normalise(KeyStat& stat, double n)
{
    stat.rate /= n;
    for (auto& [_, value]: stat.values)
        value.frequency /= n;
    for (auto& [_, child]: stat.children)
        normalise(child, n);
}

void setSource(KeyStat& stat, std::string const& source)
{
    stat.source = source;
    for (auto& [_, child]: stat.children)
        setSource(child, source);
}

void mergeInto(KeyStat& existing, KeyStat const& incoming)
{
    if (existing.compound && incoming.compound)
    {
        for (auto const& [key, child]: incoming.children)
        {
            auto it = existing.children.find(key);
            if (it == existing.children.end())
                existing.children.emplace(key, child);
            else
                mergeInto(it->second, child);
        }
        if (incoming.rate > existing.rate)
        {
            existing.rate = incoming.rate;
            existing.source = incoming.source;
        }
        return;
    }
    if (incoming.rate > existing.rate)
        existing = incoming;
}

KeyStat::Value const* argmax(KeyStat const& stat)
{
    KeyStat::Value const* best = nullptr;
    std::string const* bestKey = nullptr;
    for (auto const& [canonical, value]: stat.values)
    {
        if (!best || value.frequency > best->frequency || (value.frequency == best->frequency && canonical < *bestKey))
        {
            best = &value;
            bestKey = &canonical;
        }
    }
    return best;
}

json statRates(KeyStat const& stat)
{
    if (!stat.compound)
        return stat.rate;
    auto out = json::object();
    for (auto const& [key, child]: stat.children)
        out[key] = statRates(child);
    return out;
}

KeyStat statFromRates(json const& rates, std::string const& source)
{
    auto stat = KeyStat {};
    stat.source = source;
    if (rates.is_number())
    {
        stat.rate = rates.get<double>();
        return stat;
    }
    if (!rates.is_object())
        throw Error(Errc::SchemaViolation, "profile rate must be a number or an object");
    stat.compound = true;
    for (auto const& [key, child]: rates.items())
    {
        auto parsed = statFromRates(child, source);
        stat.rate = std::max(stat.rate, parsed.rate);
        stat.children.emplace(key, std::move(parsed));
    }
    return stat;
}

} // namespace

std::string feature_label(Feature feature, std::string const& value)
{
    return feature == Feature::Solver ? "solver=" + value : "turbulence model=" + value;
}

json profile_to_json(ProbabilityProfile const& profile)
{
    auto rates = json::object();
    auto blocks = json::object();
    for (auto const& [key, stat]: profile.keys)
    {
        rates[key] = statRates(stat);
        if (stat.compound)
            blocks[key] = stat.rate;
    }
    auto out = json { { "feature", profile.feature }, { "case_count", profile.case_count }, { "rates", std::move(rates) } };
    if (!blocks.empty())
        out["block_rates"] = std::move(blocks);
    return out;
}

ProbabilityProfile profile_from_json(json const& in)
{
    if (!in.is_object() || !in.contains("feature") || !in.contains("rates") || !in.at("rates").is_object())
        throw Error(Errc::SchemaViolation, "profile needs \"feature\" and object \"rates\"");
    auto profile = ProbabilityProfile {};
    try
    {
        profile.feature = in.at("feature").get<std::string>();
        profile.case_count = in.value("case_count", std::size_t { 0 });
        for (auto const& [key, rates]: in.at("rates").items())
            profile.keys.emplace(key, statFromRates(rates, profile.feature));
        if (in.contains("block_rates"))
            for (auto const& [key, rate]: in.at("block_rates").items())
                if (auto it = profile.keys.find(key); it != profile.keys.end())
                    it->second.rate = rate.get<double>();
    }
    catch (nlohmann::json::exception const& error)
    {
        throw Error(Errc::SchemaViolation, fmt::format("profile: {}", error.what()));
    }
    return profile;
}

ProbabilityProfile compute_profile(kb::KnowledgeBase const& kb, Feature feature, std::string const& value,
                                   std::string const& file)
{
    auto const& byFeature = feature == Feature::Solver ? kb.by_solver(value) : kb.by_turbulence(value);
    auto const& byFile = kb.by_file(file);
    auto members = std::vector<std::size_t> {};
    std::set_intersection(byFeature.begin(), byFeature.end(), byFile.begin(), byFile.end(), std::back_inserter(members));

    auto profile = ProbabilityProfile { feature_label(feature, value), members.size(), {} };
    if (members.empty())
        throw Error(Errc::NoMatchingCases, fmt::format("{}: no case provides {}", profile.feature, file));

    for (auto const index: members)
    {
        for (auto const& entry: kb.cases()[index].files.at(file))
        {
            auto const shape = shapeOf(file, entry.key, entry.value);
            if (shape == Shape::Skip)
                continue;
            auto& stat = profile.keys[entry.key];
            if (shape == Shape::Whole)
            {
                tally(stat, entry.value);
                continue;
            }
            stat.compound = true;
            stat.rate += 1.0;
            for (auto const& child: entry.value.as_dict())
                if (!skippedKey(child.key))
                    tally(stat.children[child.key], child.value);
        }
    }
    for (auto& [_, stat]: profile.keys)
    {
        normalise(stat, static_cast<double>(members.size()));
        setSource(stat, profile.feature);
    }
    return profile;
}

ProbabilityProfile merge_union_max(std::vector<ProbabilityProfile> const& profiles)
{
    auto merged = ProbabilityProfile {};
    auto labels = std::vector<std::string> {};
    for (auto const& profile: profiles)
    {
        labels.push_back(profile.feature);
        merged.case_count += profile.case_count;
        for (auto const& [key, stat]: profile.keys)
        {
            auto it = merged.keys.find(key);
            if (it == merged.keys.end())
                merged.keys.emplace(key, stat);
            else
                mergeInto(it->second, stat);
        }
    }
    merged.feature = fmt::format("{}", fmt::join(labels, " + "));
    return merged;
}

SetupTemplate collapse_refine(ProbabilityProfile const& merged, double tau)
{
    auto setup = SetupTemplate {};
    for (auto const& [key, stat]: merged.keys)
    {
        if (!(stat.rate > tau))
            continue;
        if (!stat.compound)
        {
            if (auto const* best = argmax(stat))
            {
                setup.entries.set(key, best->value);
                setup.provenance.emplace(key, Provenance { stat.source, stat.rate });
            }
            continue;
        }
        auto block = dict::Dictionary {};
        for (auto const& [childKey, child]: stat.children)
        {
            if (!(child.rate > tau))
                continue;
            if (auto const* best = argmax(child))
            {
                block.set(childKey, best->value);
                setup.provenance.emplace(key + "/" + childKey, Provenance { child.source, child.rate });
            }
        }
        if (!block.empty())
            setup.entries.set(key, dict::ConfigNode { std::move(block) });
    }
    if (setup.entries.empty())
        throw Error(Errc::EmptyTemplate, fmt::format("no entry of {} exceeds tau={}", merged.feature, tau));
    return setup;
}

json template_to_json(SetupTemplate const& setup)
{
    auto provenance = json::object();
    for (auto const& [path, origin]: setup.provenance)
        provenance[path] = json { { "feature", origin.feature }, { "rate", origin.rate } };
    return json { { "template", dict::to_json(setup.entries) },
                  { "provenance", std::move(provenance) },
                  { "audit", audit_to_json(setup.audit) } };
}

SetupTemplate template_retrieve(kb::KnowledgeBase const& kb, std::string const& solver, std::string const& turbulence,
                                std::string const& file, double tau)
{
    auto audit = AuditRecord {};
    audit.strategy = "template";
    auto profiles = std::vector<ProbabilityProfile> {};
    auto caseIds = std::set<std::string> {};

    struct Probe
    {
        Feature feature;
        std::string value;
        std::string branch;
    };
    auto const probes = std::vector<Probe> { { Feature::TurbulenceModel, turbulence, "turbulence" },
                                             { Feature::Solver, solver, "solver" } };
    for (std::size_t i = 0; i < probes.size(); ++i)
    {
        auto const& probe = probes[i];
        auto query = RetrievalQuery {};
        if (probe.feature == Feature::Solver)
            query.solver = probe.value;
        else
            query.turbulence_model = probe.value;
        query.descriptor = SetupDescriptor::file(file);
        try
        {
            auto profile = compute_profile(kb, probe.feature, probe.value, file);
            audit.ladder.push_back(LadderStep { static_cast<int>(i) + 1, "profile", probe.branch, query, profile.case_count });
            if (!audit.winning_step)
                audit.winning_step = audit.ladder.size() - 1;
            for (auto const& record: search(kb, query))
                caseIds.insert(record.case_id);
            profiles.push_back(std::move(profile));
        }
        catch (Error const& error)
        {
            if (error.code() != Errc::NoMatchingCases)
                throw;
            audit.ladder.push_back(LadderStep { static_cast<int>(i) + 1, "profile", probe.branch, query, 0 });
            audit.notes.push_back(fmt::format("{} skipped: no matching cases", feature_label(probe.feature, probe.value)));
        }
    }
    if (profiles.empty())
        throw Error(Errc::NoMatchingCases,
                    fmt::format("neither {} nor {} matches a case with {}", feature_label(Feature::TurbulenceModel, turbulence),
                                feature_label(Feature::Solver, solver), file));

    auto setup = collapse_refine(merge_union_max(profiles), tau);
    audit.notes.push_back(fmt::format("merged {} profile(s), tau={}", profiles.size(), tau));
    audit.result_case_ids.assign(caseIds.begin(), caseIds.end());
    setup.audit = std::move(audit);
    return setup;
}

} // namespace foamrag::rag

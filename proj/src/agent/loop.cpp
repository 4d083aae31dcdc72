// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>
#include <foamrag/error.hpp>
#include <foamrag/io.hpp>

#include <fmt/format.h>

#include <set>

namespace foamrag::agent
{

using json = nlohmann::ordered_json;

namespace
{

struct Session
{
    CaseSpec const& spec;
    kb::KnowledgeBase const& kb;
    LlmClient& llm;
    std::filesystem::path const& dir;
    Trail& trail;
    AgentConfig const& config;
};

void leafPaths(dict::Dictionary const& tree, std::string const& prefix, std::vector<std::pair<std::string, std::string>>& out)
{
    for (auto const& entry: tree)
    {
        if (prefix.empty() && entry.key == "FoamFile")
            continue;
        auto const path = prefix.empty() ? entry.key : prefix + "/" + entry.key;
        if (entry.value.is_dict())
            leafPaths(entry.value.as_dict(), path, out);
        else
            out.emplace_back(path, dict::node_text(entry.value));
    }
}

std::vector<std::pair<std::string, std::string>> leaves(dict::Dictionary const& tree)
{
    auto out = std::vector<std::pair<std::string, std::string>> {};
    leafPaths(tree, "", out);
    return out;
}

json changes(dict::Dictionary const& before, dict::Dictionary const& after)
{
    auto const old = leaves(before);
    auto const now = leaves(after);
    auto oldMap = std::map<std::string, std::string>(old.begin(), old.end());
    auto nowMap = std::map<std::string, std::string>(now.begin(), now.end());
    auto out = json::array();
    for (auto const& [path, text]: now)
    {
        auto it = oldMap.find(path);
        if (it == oldMap.end())
            out.push_back(json { { "key", path }, { "old", nullptr }, { "new", text } });
        else if (it->second != text)
            out.push_back(json { { "key", path }, { "old", it->second }, { "new", text } });
    }
    for (auto const& [path, text]: old)
        if (!nowMap.count(path))
            out.push_back(json { { "key", path }, { "old", text }, { "new", nullptr } });
    return out;
}

json keyList(dict::Dictionary const& tree)
{
    auto out = json::array();
    for (auto const& [path, _]: leaves(tree))
        out.push_back(path);
    return out;
}

std::string fieldOf(std::string const& file)
{
    return file.rfind("0/", 0) == 0 ? file.substr(2) : std::string {};
}

// Puts the header first and makes the boundary conditions of a field agree
// with the CaseSpec.
dict::Dictionary finalize(dict::Dictionary const& generated, CaseSpec const& spec, std::string const& file,
                          std::vector<std::string>& notes)
{
    auto out = dict::Dictionary {};
    out.set("FoamFile", dict::ConfigNode { file_header(file) });
    for (auto const& entry: generated)
        if (entry.key != "FoamFile")
            out.set(entry.key, entry.value);

    auto const field = fieldOf(file);
    if (field.empty() || !spec.ic_bc.contains(field))
        return out;
    auto const& conditions = spec.ic_bc.at(field);
    if (conditions.contains("internalField"))
        out.set("internalField", dict::parse_value(conditions.at("internalField").get<std::string>()));

    auto const* generatedBoundary = out.find_dict("boundaryField");
    auto boundary = dict::Dictionary {};
    for (auto const& name: spec.mesh_boundary_names)
    {
        auto const* existing = generatedBoundary ? generatedBoundary->find(name) : nullptr;
        if (!conditions.contains(name))
        {
            if (existing)
                boundary.set(name, *existing);
            else
                notes.push_back(fmt::format("{}: patch {} has no condition", file, name));
            continue;
        }
        auto const& wanted = conditions.at(name);
        auto patch = dict::Dictionary {};
        if (existing && existing->is_dict() && existing->as_dict().find("type")
            && existing->as_dict().find("type")->text() == wanted.at("type").get<std::string>())
            patch = existing->as_dict();
        for (auto const& [key, value]: wanted.items())
            patch.set(key, dict::node_from_json(value));
        boundary.set(name, dict::ConfigNode { std::move(patch) });
    }
    out.set("boundaryField", dict::ConfigNode { std::move(boundary) });
    return out;
}

dict::Dictionary ask(Session& session, std::string const& prompt, std::string const& file)
{
    auto response = strip_code_fences(session.llm.send(prompt));
    try
    {
        return dict::parse_dictionary(response).tree;
    }
    catch (Error const& error)
    {
        session.trail.add(json { { "event", "reask" }, { "file", file }, { "error", error.what() } });
        auto const retry = fmt::format("{}\n\nThe previous answer could not be parsed ({}). Return the complete file again.",
                                       prompt, error.what());
        response = strip_code_fences(session.llm.send(retry));
        try
        {
            return dict::parse_dictionary(response).tree;
        }
        catch (Error const& again)
        {
            throw Error(Errc::GenerationUnparseable, fmt::format("{}: {}", file, again.what()));
        }
    }
}

json retrievalEvent(std::string const& phase, std::optional<int> round, std::string const& file, rag::Route const& route,
                    Retrieved const& retrieved)
{
    auto event = json { { "event", "retrieval" }, { "phase", phase } };
    if (round)
        event["round"] = *round;
    event["file"] = file;
    event["strategy"] = retrieval_audit(retrieved).strategy;
    if (!route.note.empty())
        event["route_note"] = route.note;
    event["audit"] = rag::audit_to_json(retrieval_audit(retrieved));
    return event;
}

void noteEmpty(Retrieved& retrieved)
{
    if (auto* context = std::get_if<rag::ContextSet>(&retrieved); context && context->empty())
        context->origin.notes.push_back("empty retrieval context");
}

void writeFile(Session& session, std::string const& file, dict::Dictionary const& tree)
{
    write_text(session.dir / file, dict::serialize_foam(tree));
}

void addNotes(Session& session, std::string const& file, std::vector<std::string> const& notes)
{
    for (auto const& note: notes)
        session.trail.add(json { { "event", "note" }, { "file", file }, { "text", note } });
}

// Initialization path for one file; also used to regenerate during reflection.
void generateFile(Session& session, std::string const& file, std::string const& phase, std::optional<int> round)
{
    auto const route = rag::dispatch_init(rag::SetupDescriptor::file(file));
    auto retrieved = retrieve_for_init(session.kb, session.spec, file, session.config, route);
    noteEmpty(retrieved);
    session.trail.add(retrievalEvent(phase, round, file, route, retrieved));
    auto const generated = ask(session, assemble_init_prompt(session.spec, file, retrieved), file);
    auto notes = std::vector<std::string> {};
    auto const tree = finalize(generated, session.spec, file, notes);
    addNotes(session, file, notes);
    writeFile(session, file, tree);
    auto event = json { { "event", "write" }, { "phase", phase } };
    if (round)
        event["round"] = *round;
    event["file"] = file;
    event["action"] = phase == "init" ? "generate" : "regenerate";
    event["keys"] = keyList(tree);
    session.trail.add(std::move(event));
}

Retrieved withFallback(kb::KnowledgeBase const& kb, CaseSpec const& spec, std::string const& file, AgentConfig const& config)
{
    try
    {
        return rag::template_retrieve(kb, spec.solver, spec.turbulence_model, file, config.tau);
    }
    catch (Error const& error)
    {
        if (error.code() != Errc::NoMatchingCases && error.code() != Errc::EmptyTemplate)
            throw;
        auto context = rag::cascading_fallback(kb, spec.solver, spec.turbulence_model, rag::SetupDescriptor::file(file),
                                               config.n_max);
        context.origin.notes.insert(context.origin.notes.begin(),
                                    fmt::format("template unavailable ({}); cascading fallback used", error.what()));
        return context;
    }
}

std::optional<std::string> boundaryTypeFor(CaseSpec const& spec, ErrorDiagnosis const& diagnosis,
                                           dict::Dictionary const* current)
{
    auto const field = fieldOf(diagnosis.file);
    if (diagnosis.patch && !field.empty())
    {
        if (spec.ic_bc.contains(field) && spec.ic_bc.at(field).contains(*diagnosis.patch))
            return spec.ic_bc.at(field).at(*diagnosis.patch).at("type").get<std::string>();
        if (current)
            if (auto const* boundary = current->find_dict("boundaryField"))
                if (auto const* patch = boundary->find(*diagnosis.patch); patch && patch->is_dict())
                    if (auto const* type = patch->as_dict().find("type"))
                        return type->text();
    }
    return diagnosis.keyword;
}

Retrieved retrieveForReflect(Session& session, ErrorDiagnosis const& diagnosis, rag::Route const& route,
                             dict::Dictionary const* current)
{
    auto const& spec = session.spec;
    auto const& kb = session.kb;
    auto const target = rag::SetupDescriptor::file(diagnosis.file);
    auto const n = session.config.n_max;
    switch (route.strategy)
    {
    case rag::Strategy::MultiSource:
        if (auto const type = boundaryTypeFor(spec, diagnosis, current))
            return rag::multi_source_retrieve(kb, spec.solver, spec.turbulence_model, *type, n);
        return rag::cascading_fallback(kb, spec.solver, spec.turbulence_model, target, n);
    case rag::Strategy::Template:
        return withFallback(kb, spec, diagnosis.file, session.config);
    case rag::Strategy::Keyword:
        return rag::keyword_retrieve(kb, spec.solver, spec.turbulence_model, target, *diagnosis.keyword, n);
    case rag::Strategy::AllModel:
        return rag::all_model_retrieve(kb, spec.solver, spec.turbulence_model, target, n);
    case rag::Strategy::CascadingFallback:
        break;
    }
    return rag::cascading_fallback(kb, spec.solver, spec.turbulence_model, target, n);
}

void correct(Session& session, ErrorDiagnosis const& diagnosis, std::string const& log, int round)
{
    auto const path = session.dir / diagnosis.file;
    if (!std::filesystem::is_regular_file(path))
    {
        generateFile(session, diagnosis.file, "reflect", round);
        return;
    }
    auto const content = read_text(path);
    auto const before = dict::parse_dictionary(content).tree;

    auto const route = rag::dispatch_reflect(rag::ReflectTarget { diagnosis.category, diagnosis.sub_type, diagnosis.file,
                                                                  diagnosis.keyword });
    auto retrieved = retrieveForReflect(session, diagnosis, route, &before);
    noteEmpty(retrieved);
    session.trail.add(retrievalEvent("reflect", round, diagnosis.file, route, retrieved));

    auto const advice =
        session.llm.send(assemble_diagnostic_prompt(diagnosis, log, content, session.spec, retrieved));
    session.trail.add(json { { "event", "advice" }, { "round", round }, { "file", diagnosis.file }, { "text", advice } });
    auto const rewritten = ask(session, assemble_rewrite_prompt(diagnosis.file, advice, content, retrieved), diagnosis.file);

    auto notes = std::vector<std::string> {};
    auto const after = finalize(rewritten, session.spec, diagnosis.file, notes);
    addNotes(session, diagnosis.file, notes);
    writeFile(session, diagnosis.file, after);
    session.trail.add(json { { "event", "write" },
                             { "phase", "reflect" },
                             { "round", round },
                             { "file", diagnosis.file },
                             { "action", "correct" },
                             { "changes", changes(before, after) } });
}

} // namespace

void Trail::add(json event)
{
    _events.push_back(std::move(event));
}

std::string Trail::jsonl() const
{
    auto out = std::string {};
    for (auto const& event: _events)
        out += event.dump() + "\n";
    return out;
}

void Trail::write(std::filesystem::path const& path) const
{
    write_text(path, jsonl());
}

Retrieved retrieve_for_init(kb::KnowledgeBase const& kb, CaseSpec const& spec, std::string const& file,
                            AgentConfig const& config, rag::Route const& route)
{
    auto const target = rag::SetupDescriptor::file(file);
    Retrieved retrieved = [&]() -> Retrieved {
        switch (route.strategy)
        {
        case rag::Strategy::AllModel:
            return rag::all_model_retrieve(kb, spec.solver, spec.turbulence_model, target, config.n_max);
        case rag::Strategy::Template:
            return withFallback(kb, spec, file, config);
        case rag::Strategy::CascadingFallback:
        case rag::Strategy::MultiSource:
        case rag::Strategy::Keyword:
            break;
        }
        return rag::cascading_fallback(kb, spec.solver, spec.turbulence_model, target, config.n_max);
    }();
    if (!route.note.empty())
    {
        auto& notes = std::holds_alternative<rag::SetupTemplate>(retrieved)
                          ? std::get<rag::SetupTemplate>(retrieved).audit.notes
                          : std::get<rag::ContextSet>(retrieved).origin.notes;
        notes.push_back(route.note);
    }
    return retrieved;
}

void generate_case(CaseSpec const& spec, kb::KnowledgeBase const& kb, LlmClient& llm, std::filesystem::path const& case_dir,
                   Trail& trail, AgentConfig const& config)
{
    std::filesystem::create_directories(case_dir);
    auto session = Session { spec, kb, llm, case_dir, trail, config };
    for (auto const& target: spec.target_files)
        generateFile(session, target.target, "init", std::nullopt);
}

Outcome reflection_loop(std::filesystem::path const& case_dir, CaseSpec const& spec, kb::KnowledgeBase const& kb,
                        LlmClient& llm, Executor& executor, Trail& trail, AgentConfig const& config)
{
    auto session = Session { spec, kb, llm, case_dir, trail, config };
    auto state = ReflectionState {};
    auto escalated = std::set<std::string> {};
    auto outcome = Outcome {};
    auto finish = [&](bool success, std::string reason) {
        outcome.success = success;
        outcome.reason = std::move(reason);
        outcome.reflections = state.round;
        auto event = json { { "event", "outcome" }, { "status", success ? "accurate-candidate" : "failed" } };
        if (!outcome.reason.empty())
            event["reason"] = outcome.reason;
        event["runs"] = outcome.runs;
        event["reflections"] = outcome.reflections;
        trail.add(std::move(event));
        return outcome;
    };

    for (;;)
    {
        auto const result = executor.run(case_dir);
        ++outcome.runs;
        auto run = json { { "event", "execution" }, { "run", outcome.runs }, { "success", result.success }, { "steps", result.steps } };
        if (!result.success)
            run["signature"] = error_signature(result.log);
        trail.add(std::move(run));
        if (result.success)
            return finish(true, {});
        if (state.round >= config.reflection_cap)
            return finish(false, "ReflectionThresholdExceeded");

        auto const log = result.log.empty() ? std::string { "executor reported failure without a log" } : result.log;
        auto const diagnosis = classify_error(log, state);
        ++state.signature_counts[diagnosis.signature];
        state.round += 1;
        auto event = json { { "event", "diagnosis" }, { "round", state.round } };
        auto const fields = diagnosis_to_json(diagnosis);
        for (auto const& [key, value]: fields.items())
            event[key] = value;
        state.history.push_back(event);
        trail.add(std::move(event));

        try
        {
            if (diagnosis.category == rag::ErrorCategory::Persistent)
            {
                if (escalated.count(diagnosis.signature))
                    return finish(false, "PersistentError");
                escalated.insert(diagnosis.signature);
                generateFile(session, diagnosis.file, "reflect", state.round);
                continue;
            }
            if (diagnosis.category == rag::ErrorCategory::FileMissing)
            {
                generateFile(session, diagnosis.file, "reflect", state.round);
                continue;
            }
            correct(session, diagnosis, log, state.round);
        }
        catch (Error const& error)
        {
            if (error.code() != Errc::UnroutableTarget && error.code() != Errc::NoMatchingCases)
                throw;
            trail.add(json { { "event", "note" }, { "round", state.round }, { "file", diagnosis.file }, { "text", error.what() } });
        }
    }
}

Outcome run_case(CaseSpec const& spec, kb::KnowledgeBase const& kb, LlmClient& llm, Executor& executor,
                 std::filesystem::path const& case_dir, Trail& trail, AgentConfig const& config)
{
    try
    {
        generate_case(spec, kb, llm, case_dir, trail, config);
        auto const outcome = reflection_loop(case_dir, spec, kb, llm, executor, trail, config);
        trail.write(case_dir / "trail.jsonl");
        return outcome;
    }
    catch (...)
    {
        trail.write(case_dir / "trail.jsonl");
        throw;
    }
}

} // namespace foamrag::agent

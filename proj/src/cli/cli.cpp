// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>
#include <foamrag/cli.hpp>
#include <foamrag/io.hpp>
#include <foamrag/kb.hpp>
#include <foamrag/rag.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <optional>

namespace foamrag::cli
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace
{

struct BuildOptions
{
    std::string tutorials;
    std::string guidance;
    std::string out;
};

struct QueryOptions
{
    std::string kb;
    std::string solver;
    std::string turbulence;
    std::string file;
    std::string boundary;
    std::string keyword;
    std::string strategy = "auto";
    std::size_t n_max = rag::DefaultNMax;
    double tau = rag::DefaultTau;
};

struct RunOptions
{
    std::string kb;
    std::string spec;
    std::string workdir;
    std::string llm = "echo";
    std::string executor = "scripted";
    int max_reflections = agent::DefaultReflectionCap;
    std::size_t n_max = rag::DefaultNMax;
    double tau = rag::DefaultTau;
    std::string replay_file;
    std::string llm_command;
    std::string executor_script;
    std::string executor_command;
    std::string record;
};

struct AuditOptions
{
    std::string trail;
    std::string param;
};

class UsageError: public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

std::string defaultKb()
{
    auto const* value = std::getenv("PHYNIKCE_KB");
    return value ? std::string { value } : std::string {};
}

std::string requireKb(std::string const& kb)
{
    if (kb.empty())
        throw UsageError("--kb is required (or set PHYNIKCE_KB)");
    return kb;
}

void checkTuning(std::size_t n_max, double tau)
{
    if (n_max < 1)
        throw UsageError("--n-max must be at least 1");
    if (!(tau >= 0.0 && tau < 1.0))
        throw UsageError("--tau must lie in [0, 1)");
}

int buildKb(BuildOptions const& options, std::ostream& out)
{
    auto guidance = std::vector<kb::GuidanceDocument> {};
    if (!options.guidance.empty())
        guidance = kb::load_guidance_documents(options.guidance);
    auto const result = kb::build_kb(options.tutorials, guidance);
    write_text(options.out, kb::serialize_kb(result.kb));
    out << result.kb.cases().size() << " cases indexed\n";
    for (auto const& exclusion: result.excluded)
        out << "excluded " << exclusion.case_path << ": " << to_string(exclusion.code) << ": " << exclusion.message << "\n";
    return Ok;
}

std::optional<rag::Strategy> chosenStrategy(std::string const& name)
{
    if (name == "auto")
        return std::nullopt;
    static auto const names = std::map<std::string, rag::Strategy> {
        { "cascade", rag::Strategy::CascadingFallback }, { "allmodel", rag::Strategy::AllModel },
        { "template", rag::Strategy::Template },         { "multisource", rag::Strategy::MultiSource },
        { "keyword", rag::Strategy::Keyword },
    };
    return names.at(name);
}

int query(QueryOptions const& options, std::ostream& out)
{
    checkTuning(options.n_max, options.tau);
    if (options.file.empty() == options.boundary.empty())
        throw UsageError("exactly one of --file and --boundary is required");
    auto const knowledge = kb::load_kb(requireKb(options.kb));
    if (!knowledge.solver_compressibility().count(options.solver))
        throw Error(Errc::UnknownSolver, fmt::format("solver '{}' is not in the compressibility table", options.solver));
    auto const target = options.file.empty() ? rag::SetupDescriptor::boundary(options.boundary)
                                             : rag::SetupDescriptor::file(options.file);

    auto route = rag::Route {};
    if (auto const strategy = chosenStrategy(options.strategy))
        route.strategy = *strategy;
    else
        route = rag::dispatch_init(target);

    auto document = json::object();
    document["strategy"] = std::string(rag::to_string(route.strategy));
    if (!route.note.empty())
        document["route_note"] = route.note;
    auto const& solver = options.solver;
    auto const& turbulence = options.turbulence;
    switch (route.strategy)
    {
    case rag::Strategy::Template:
    {
        if (!target.is_file())
            throw Error(Errc::UnroutableTarget, "the template strategy needs --file");
        auto const setup = rag::template_retrieve(knowledge, solver, turbulence, target.target, options.tau);
        document["context"] = dict::to_json(setup.entries);
        document["result"] = rag::template_to_json(setup);
        break;
    }
    case rag::Strategy::MultiSource:
    case rag::Strategy::Keyword:
    case rag::Strategy::AllModel:
    case rag::Strategy::CascadingFallback:
    {
        auto context = rag::ContextSet {};
        if (route.strategy == rag::Strategy::MultiSource)
        {
            if (target.is_file())
                throw Error(Errc::UnroutableTarget, "the multisource strategy needs --boundary");
            context = rag::multi_source_retrieve(knowledge, solver, turbulence, target.target, options.n_max);
        }
        else if (route.strategy == rag::Strategy::Keyword)
        {
            if (options.keyword.empty())
                throw UsageError("the keyword strategy needs --keyword");
            context = rag::keyword_retrieve(knowledge, solver, turbulence, target, options.keyword, options.n_max);
        }
        else if (route.strategy == rag::Strategy::AllModel)
            context = rag::all_model_retrieve(knowledge, solver, turbulence, target, options.n_max);
        else
            context = rag::cascading_fallback(knowledge, solver, turbulence, target, options.n_max);
        document["context"] = rag::context_to_prompt_json(context);
        document["result"] = rag::context_to_json(context);
        break;
    }
    }
    out << document.dump(4) << "\n";
    return Ok;
}

std::unique_ptr<agent::LlmClient> makeLlm(RunOptions const& options)
{
    if (options.llm == "echo")
        return std::make_unique<agent::EchoContextLlm>();
    if (options.llm == "replay")
    {
        if (options.replay_file.empty())
            throw Error(Errc::PortConfiguration, "--llm replay needs --replay-file");
        return agent::ReplayLlm::from_file(options.replay_file);
    }
    if (options.llm_command.empty())
        throw Error(Errc::PortConfiguration, "--llm external-command needs --llm-command");
    return std::make_unique<agent::CommandLlm>(options.llm_command);
}

std::unique_ptr<agent::Executor> makeExecutor(RunOptions const& options)
{
    if (options.executor == "scripted")
    {
        if (options.executor_script.empty())
            throw Error(Errc::PortConfiguration, "--executor scripted needs --executor-script");
        return agent::ScriptedExecutor::from_file(options.executor_script);
    }
    if (options.executor_command.empty())
        throw Error(Errc::PortConfiguration, "--executor external-command needs --executor-command");
    return std::make_unique<agent::CommandExecutor>(options.executor_command);
}

int run(RunOptions const& options, std::ostream& out)
{
    checkTuning(options.n_max, options.tau);
    if (options.max_reflections < 0)
        throw UsageError("--max-reflections must not be negative");
    if (!fs::is_regular_file(options.spec))
        throw Error(Errc::Io, fmt::format("spec file '{}' does not exist", options.spec));
    auto const knowledge = kb::load_kb(requireKb(options.kb));
    auto const spec = agent::load_case_spec_file(options.spec, knowledge.solver_compressibility());
    auto llm = makeLlm(options);
    auto executor = makeExecutor(options);
    auto recorder = std::optional<agent::RecordingLlm> {};
    auto* client = llm.get();
    if (!options.record.empty())
        client = &recorder.emplace(*llm);

    auto const config = agent::AgentConfig { options.n_max, options.tau, options.max_reflections };
    auto trail = agent::Trail {};
    auto saveRecording = [&] {
        if (recorder)
            write_text(options.record, recorder->recorded().dump(4) + "\n");
    };
    auto outcome = agent::Outcome {};
    try
    {
        outcome = agent::run_case(spec, knowledge, *client, *executor, options.workdir, trail, config);
    }
    catch (...)
    {
        saveRecording();
        throw;
    }
    saveRecording();
    if (outcome.success)
        out << fmt::format("accurate-candidate after {} run(s), {} reflection(s)\n", outcome.runs, outcome.reflections);
    else
        out << fmt::format("failed ({}) after {} run(s), {} reflection(s)\n", outcome.reason, outcome.runs,
                           outcome.reflections);
    out << "trail: " << (fs::path(options.workdir) / "trail.jsonl").generic_string() << "\n";
    return outcome.success ? Ok : CaseFailed;
}

int audit(AuditOptions const& options, std::ostream& out)
{
    auto const text = read_text(options.trail);
    auto const param = options.param.empty() ? std::nullopt : std::optional<std::string> { options.param };
    for (auto const& line: agent::audit_report(text, param))
        out << line << "\n";
    return Ok;
}

} // namespace

int exit_code_for(Errc code)
{
    switch (code)
    {
    case Errc::Io:
    case Errc::PortConfiguration:
    case Errc::ExecutorUnavailable:
    case Errc::ReplayMiss:
        return Environment;
    case Errc::GenerationUnparseable:
        return CaseFailed;
    case Errc::UnbalancedDelimiters:
    case Errc::MissingSemicolon:
    case Errc::UnexpectedToken:
    case Errc::InvalidEncoding:
    case Errc::RawEmissionConflict:
    case Errc::MissingControlDict:
    case Errc::ParseFailure:
    case Errc::MissingApplication:
    case Errc::UnknownSolver:
    case Errc::ConflictingEvidence:
    case Errc::MalformedGuidance:
    case Errc::EmptyCorpus:
    case Errc::NoMatchingCases:
    case Errc::EmptyTemplate:
    case Errc::UnroutableTarget:
    case Errc::SchemaViolation:
    case Errc::MissingSlot:
        break;
    }
    return Input;
}

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app { "Deterministic retrieval and case generation for OpenFOAM setups", "foamrag" };
    app.require_subcommand(1);

    auto build = BuildOptions {};
    auto* buildCommand = app.add_subcommand("build-kb", "Index a tutorial corpus into a knowledge base file");
    buildCommand->add_option("--tutorials", build.tutorials, "Corpus root")->required();
    buildCommand->add_option("--guidance", build.guidance, "Directory of boundary-condition guidance JSON");
    buildCommand->add_option("--out", build.out, "Knowledge base output file")->required();

    auto q = QueryOptions {};
    q.kb = defaultKb();
    auto* queryCommand = app.add_subcommand("query", "Run one retrieval and print the result as JSON");
    queryCommand->add_option("--kb", q.kb, "Knowledge base file (default: $PHYNIKCE_KB)");
    queryCommand->add_option("--solver", q.solver)->required();
    queryCommand->add_option("--turbulence", q.turbulence)->required();
    auto* fileOption = queryCommand->add_option("--file", q.file, "Setup file such as system/fvSchemes");
    queryCommand->add_option("--boundary", q.boundary, "Boundary condition type")->excludes(fileOption);
    queryCommand->add_option("--keyword", q.keyword);
    queryCommand->add_option("--strategy", q.strategy)
        ->check(CLI::IsMember({ "auto", "cascade", "allmodel", "template", "multisource", "keyword" }));
    queryCommand->add_option("--n-max", q.n_max);
    queryCommand->add_option("--tau", q.tau);

    auto r = RunOptions {};
    r.kb = defaultKb();
    auto* runCommand = app.add_subcommand("run", "Generate a case and run the reflection loop");
    runCommand->add_option("--kb", r.kb, "Knowledge base file (default: $PHYNIKCE_KB)");
    runCommand->add_option("--spec", r.spec, "CaseSpec JSON file")->required();
    runCommand->add_option("--workdir", r.workdir, "Case directory to write")->required();
    runCommand->add_option("--llm", r.llm)->check(CLI::IsMember({ "replay", "echo", "external-command" }));
    runCommand->add_option("--executor", r.executor)->check(CLI::IsMember({ "scripted", "external-command" }));
    runCommand->add_option("--max-reflections", r.max_reflections);
    runCommand->add_option("--n-max", r.n_max);
    runCommand->add_option("--tau", r.tau);
    runCommand->add_option("--replay-file", r.replay_file, "Recorded responses for --llm replay");
    runCommand->add_option("--llm-command", r.llm_command, "Shell command for --llm external-command");
    runCommand->add_option("--executor-script", r.executor_script, "Fault script for --executor scripted");
    runCommand->add_option("--executor-command", r.executor_command, "Shell command for --executor external-command");
    runCommand->add_option("--record", r.record, "Write every LLM exchange to a replay file");

    auto a = AuditOptions {};
    auto* auditCommand = app.add_subcommand("audit", "Print the decision report of a trail");
    auditCommand->add_option("--trail", a.trail)->required();
    auditCommand->add_option("--param", a.param, "Only entries touching this key");

    try
    {
        auto reversed = std::vector<std::string>(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (CLI::ParseError const& error)
    {
        auto const code = app.exit(error, out, err);
        return code == 0 ? Ok : Input;
    }

    try
    {
        if (buildCommand->parsed())
            return buildKb(build, out);
        if (queryCommand->parsed())
            return query(q, out);
        if (runCommand->parsed())
            return run(r, out);
        return audit(a, out);
    }
    catch (UsageError const& error)
    {
        err << "error: " << error.what() << "\n";
        return Input;
    }
    catch (Error const& error)
    {
        err << "error: " << error.what() << "\n";
        return exit_code_for(error.code());
    }
    catch (std::exception const& error)
    {
        err << "error: " << error.what() << "\n";
        return Environment;
    }
}

} // namespace foamrag::cli

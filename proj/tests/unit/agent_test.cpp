// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"
#include "../support/generators.hpp"
#include "../support/scenarios.hpp"

#include <foamrag/agent.hpp>
#include <foamrag/error.hpp>
#include <foamrag/io.hpp>

#include <gtest/gtest.h>

#include <regex>

namespace foamrag::agent
{
namespace
{

using json = nlohmann::ordered_json;
using test::fixtures;
using test::mini_kb;
using test::scratch_dir;

CaseSpec spec_fixture(std::string const& name)
{
    return load_case_spec_file(fixtures() / "specs" / (name + ".json"));
}

template<typename Fn>
Errc code_of(Fn&& fn)
{
    try
    {
        fn();
    }
    catch (Error const& error)
    {
        return error.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::Io;
}

std::vector<json> events(Trail const& trail, std::string const& kind)
{
    auto out = std::vector<json> {};
    for (auto const& event: trail.events())
        if (event.at("event") == kind)
            out.push_back(event);
    return out;
}

std::vector<json> parse_jsonl(std::string const& text)
{
    auto out = std::vector<json> {};
    auto stream = std::istringstream(text);
    for (std::string line; std::getline(stream, line);)
        out.push_back(json::parse(line));
    return out;
}

// CaseSpec --------------------------------------------------------------------

TEST(CaseSpec, AirfoilAtTenDegrees)
{
    auto const spec = spec_fixture("naca0012");
    EXPECT_EQ(spec.solver, "simpleFoam");
    EXPECT_EQ(spec.turbulence_model, "kOmegaSST");
    EXPECT_EQ(spec.physical_properties.at("angle_of_attack").at("value"), 10);
    EXPECT_EQ(spec.mesh_boundary_names, (std::vector<std::string> { "inlet", "outlet", "airfoil", "frontAndBack" }));
    ASSERT_EQ(spec.target_files.size(), 10u);
    EXPECT_EQ(spec.target_files.front(), rag::SetupDescriptor::file("0/U"));
}

TEST(CaseSpec, NozzleAtPressureRatioThree)
{
    auto const spec = spec_fixture("nozzle");
    EXPECT_EQ(spec.solver, "rhoCentralFoam");
    EXPECT_EQ(spec.turbulence_model, "SpalartAllmaras");
    EXPECT_EQ(spec.physical_properties.at("nozzle_pressure_ratio").at("value"), 3);
    EXPECT_TRUE(kb::builtin_compressibility().at(spec.solver));
}

TEST(CaseSpec, SchemaViolations)
{
    auto const base = json::parse(read_text(fixtures() / "specs" / "pitzdaily.json"));
    auto without = [&](std::string const& key) {
        auto copy = base;
        copy.erase(key);
        return copy;
    };
    EXPECT_EQ(code_of([&] { load_case_spec(without("solver")); }), Errc::SchemaViolation);
    EXPECT_EQ(code_of([&] { load_case_spec(without("mesh_boundary_names")); }), Errc::SchemaViolation);

    auto badTarget = base;
    badTarget["target_files"] = json::array({ "fvSchemes" });
    EXPECT_EQ(code_of([&] { load_case_spec(badTarget); }), Errc::SchemaViolation);

    auto strayPatch = base;
    strayPatch["ic_bc"]["U"]["sideWall"] = json { { "type", "noSlip" } };
    EXPECT_EQ(code_of([&] { load_case_spec(strayPatch); }), Errc::SchemaViolation);

    auto untyped = base;
    untyped["ic_bc"]["U"]["inlet"].erase("type");
    EXPECT_EQ(code_of([&] { load_case_spec(untyped); }), Errc::SchemaViolation);

    auto unknown = base;
    unknown["solver"] = "warpDriveFoam";
    EXPECT_EQ(code_of([&] { load_case_spec(unknown); }), Errc::UnknownSolver);
}

// Prompts ----------------------------------------------------------------------

TEST(Prompts, TemplatesMatchPublishedProtocols)
{
    EXPECT_EQ(std::string(init_prompt_template()) + "\n", read_text(fixtures() / "prompts" / "init.txt"));
    EXPECT_EQ(std::string(diagnostic_prompt_template()) + "\n", read_text(fixtures() / "prompts" / "diagnostic.txt"));
}

TEST(Prompts, FillSlots)
{
    EXPECT_EQ(fill_slots("a {x} b {{x}} c", { { "x", "1" } }), "a 1 b 1 c");
    // Substituted text is not scanned again.
    EXPECT_EQ(fill_slots("{x}", { { "x", "{y}" } }), "{y}");
    EXPECT_EQ(fill_slots("dict { a 1; }", {}), "dict { a 1; }");
    EXPECT_EQ(code_of([] { fill_slots("{missing}", {}); }), Errc::MissingSlot);
}

TEST(Prompts, InitPromptCarriesEverySlotOnceInOrder)
{
    auto const spec = spec_fixture("pitzdaily");
    auto const route = rag::dispatch_init(rag::SetupDescriptor::file("0/U"));
    auto const context = retrieve_for_init(mini_kb(), spec, "0/U", {}, route);
    auto const prompt = assemble_init_prompt(spec, "0/U", context);

    auto const icbc = spec.ic_bc.dump(4);
    auto const physics = spec.physical_properties.dump(4);
    auto const retrieved = retrieval_contents(context);
    auto once = [&](std::string const& needle) {
        auto const first = prompt.find(needle);
        EXPECT_NE(first, std::string::npos) << needle;
        EXPECT_EQ(prompt.find(needle, first + 1), std::string::npos) << needle;
        return first;
    };
    auto const a = once(icbc);
    auto const b = once(physics);
    auto const c = once(retrieved);
    auto const d = once("FoamFile {");
    EXPECT_LT(a, b);
    EXPECT_LT(b, c);
    EXPECT_LT(c, d);
    EXPECT_NE(prompt.find("target file: '0/U'"), std::string::npos);
    EXPECT_FALSE(std::regex_search(prompt, std::regex(R"(\{(file_name|case_ic_bc|case_physical_properties|retrieval_contents|header)\})")));
    EXPECT_EQ(prompt, assemble_init_prompt(spec, "0/U", context));
}

TEST(Prompts, DiagnosticPromptReinjectsPhysics)
{
    auto const spec = spec_fixture("pitzdaily");
    auto const diagnosis = classify_error("--> FOAM FATAL ERROR: \nUnknown discretisation scheme\n", {});
    auto const context = rag::all_model_retrieve(mini_kb(), spec.solver, spec.turbulence_model,
                                                 rag::SetupDescriptor::file("system/fvSchemes"));
    auto const prompt = assemble_diagnostic_prompt(diagnosis, "LOG TEXT", "ddtSchemes {}", spec, context);
    EXPECT_NE(prompt.find(spec.ic_bc.dump(4)), std::string::npos);
    EXPECT_NE(prompt.find(spec.physical_properties.dump(4)), std::string::npos);
    EXPECT_NE(prompt.find("LOG TEXT"), std::string::npos);
    EXPECT_NE(prompt.find("correcting the file system/fvSchemes."), std::string::npos);
}

TEST(Prompts, HeaderClassFollowsFile)
{
    EXPECT_EQ(file_header("0/U").find("class")->text(), "volVectorField");
    EXPECT_EQ(file_header("0/p").find("class")->text(), "volScalarField");
    EXPECT_EQ(file_header("system/fvSchemes").find("class")->text(), "dictionary");
    EXPECT_EQ(file_header("system/fvSchemes").find("object")->text(), "fvSchemes");
}

TEST(Prompts, StripCodeFences)
{
    EXPECT_EQ(strip_code_fences("```foam\na 1;\n```\n"), "a 1;\n");
    EXPECT_EQ(strip_code_fences("```\na 1;\n```"), "a 1;\n");
    EXPECT_EQ(strip_code_fences("a 1;\n"), "a 1;\n");
}

// Classification -----------------------------------------------------------------

TEST(Classify, LabelledLogs)
{
    auto const labelled = json::parse(read_text(fixtures() / "logs" / "labelled.json"));
    ASSERT_GE(labelled.size(), 10u);
    for (auto const& item: labelled)
    {
        SCOPED_TRACE(item.at("name").get<std::string>());
        auto const diagnosis = classify_error(item.at("log").get<std::string>(), {});
        EXPECT_EQ(rag::to_string(diagnosis.category), item.at("category").get<std::string>());
        if (item.contains("sub_type"))
        {
            ASSERT_TRUE(diagnosis.sub_type.has_value());
            EXPECT_EQ(rag::to_string(*diagnosis.sub_type), item.at("sub_type").get<std::string>());
        }
        EXPECT_EQ(diagnosis.file, item.at("file").get<std::string>());
        if (item.contains("keyword"))
            EXPECT_EQ(diagnosis.keyword.value_or("<none>"), item.at("keyword").get<std::string>());
        if (item.contains("patch"))
            EXPECT_EQ(diagnosis.patch.value_or("<none>"), item.at("patch").get<std::string>());
    }
}

TEST(Classify, SignatureMasksStandaloneNumbers)
{
    EXPECT_EQ(error_signature("--> FOAM FATAL IO ERROR: \nkeyword p0 undefined in \"/case/0/p\" at line 24 after 1.5e-3 s\n"),
              "keyword p0 undefined in \"/case/0/p\" at line # after # s");
    EXPECT_EQ(error_signature(""), "<empty log>");
}

TEST(Classify, SignatureIgnoresVaryingNumbers)
{
    auto rng = test::Rng(5150);
    for (int trial = 0; trial < 200; ++trial)
    {
        auto number = [&] { return std::to_string(std::uniform_int_distribution<int>(0, 100000)(rng)); };
        auto const a = "--> FOAM FATAL ERROR: \ndiverged at iteration " + number() + " residual " + number() + ".5\n";
        auto const b = "--> FOAM FATAL ERROR: \ndiverged at iteration " + number() + " residual " + number() + ".5\n";
        ASSERT_EQ(error_signature(a), error_signature(b));
    }
}

TEST(Classify, RepeatedSignatureBecomesPersistent)
{
    auto const log = std::string { "--> FOAM FATAL ERROR: \nsolution singularity in linear solver\n" };
    auto state = ReflectionState {};
    auto const signature = error_signature(log);
    EXPECT_EQ(classify_error(log, state).category, rag::ErrorCategory::ComplexConfiguration);
    state.signature_counts[signature] = 1;
    EXPECT_EQ(classify_error(log, state).category, rag::ErrorCategory::ComplexConfiguration);
    state.signature_counts[signature] = 2;
    auto const diagnosis = classify_error(log, state);
    EXPECT_EQ(diagnosis.category, rag::ErrorCategory::Persistent);
    EXPECT_EQ(diagnosis.file, "system/fvSolution");
}

// Ports --------------------------------------------------------------------------

TEST(Ports, PromptKeyIsFnv1a64)
{
    EXPECT_EQ(prompt_key(""), "cbf29ce484222325");
    EXPECT_EQ(prompt_key("a"), "af63dc4c8601ec8c");
}

TEST(Ports, RecordThenReplay)
{
    auto echo = EchoContextLlm {};
    auto recorder = RecordingLlm(echo);
    auto const answer = recorder.send("nothing to echo");
    auto replay = ReplayLlm(recorder.recorded());
    EXPECT_EQ(replay.send("nothing to echo"), answer);
    EXPECT_EQ(code_of([&] { replay.send("another prompt"); }), Errc::ReplayMiss);
}

TEST(Ports, ScriptedExecutorFaults)
{
    auto const dir = scratch_dir("scripted_executor");
    write_text(dir / "system" / "fvSchemes", "divSchemes { div(phi,U) Gauss linear; }\n");
    auto script = json::parse(R"J({"faults": [
        {"file": "system/fvSchemes", "path": "divSchemes/div(phi,U)", "equals": "Gauss linear", "log": "bad {tag}"},
        {"file": "system/fvSolution", "absent": true, "log": "no fvSolution"}], "steps": 12})J");
    auto executor = ScriptedExecutor(script);
    auto first = executor.run(dir);
    EXPECT_FALSE(first.success);
    EXPECT_EQ(first.log, "bad a");
    EXPECT_EQ(executor.run(dir).log, "bad b");
    write_text(dir / "system" / "fvSchemes", "divSchemes { div(phi,U) Gauss upwind; }\n");
    EXPECT_EQ(executor.run(dir).log, "no fvSolution");
    write_text(dir / "system" / "fvSolution", "solvers {}\n");
    auto const done = executor.run(dir);
    EXPECT_TRUE(done.success);
    EXPECT_EQ(done.steps, 12);
    EXPECT_EQ(executor.runs(), 4);
}

TEST(Ports, CommandBackends)
{
    auto llm = CommandLlm("cat");
    EXPECT_EQ(llm.send("round trip"), "round trip");
    auto failing = CommandLlm("false");
    EXPECT_EQ(code_of([&] { failing.send("x"); }), Errc::PortConfiguration);

    auto const dir = scratch_dir("command_executor");
    auto solver = CommandExecutor("for i in 1 2 3 4 5 6 7 8 9 10 11; do echo \"Time = $i\"; done");
    auto const result = solver.run(dir);
    EXPECT_TRUE(result.success);
    EXPECT_EQ(result.steps, 11);
    auto shortRun = CommandExecutor("echo 'Time = 1'");
    EXPECT_FALSE(shortRun.run(dir).success);
    auto missing = CommandExecutor("no-such-solver-binary-here");
    EXPECT_EQ(code_of([&] { missing.run(dir); }), Errc::ExecutorUnavailable);
}

// Generation ---------------------------------------------------------------------

TEST(Generation, EchoMockBuildsConsistentCase)
{
    auto const spec = spec_fixture("pitzdaily");
    auto const dir = scratch_dir("generate_pitzdaily");
    auto llm = EchoContextLlm {};
    auto trail = Trail {};
    generate_case(spec, mini_kb(), llm, dir, trail);

    auto const u = dict::parse_dictionary(read_text(dir / "0" / "U")).tree;
    auto const* boundary = u.find_dict("boundaryField");
    ASSERT_NE(boundary, nullptr);
    auto names = std::vector<std::string> {};
    for (auto const& patch: *boundary)
        names.push_back(patch.key);
    EXPECT_EQ(names, spec.mesh_boundary_names);
    EXPECT_EQ(dict::node_text(*u.find("internalField")), "uniform (0 0 0)");

    auto const solution = dict::parse_dictionary(read_text(dir / "system" / "fvSolution")).tree;
    auto const setup = rag::template_retrieve(mini_kb(), spec.solver, spec.turbulence_model, "system/fvSolution");
    for (auto const& entry: setup.entries)
        EXPECT_NE(solution.find(entry.key), nullptr) << entry.key;

    for (auto const& target: spec.target_files)
    {
        auto const text = read_text(dir / target.target);
        auto const tree = dict::parse_dictionary(text).tree;
        EXPECT_EQ(tree.begin()->key, "FoamFile") << target.target;
        EXPECT_EQ(dict::serialize_foam(dict::parse_dictionary(dict::serialize_foam(tree)).tree), dict::serialize_foam(tree));
    }
    EXPECT_EQ(events(trail, "retrieval").size(), spec.target_files.size());
    EXPECT_EQ(events(trail, "write").size(), spec.target_files.size());
}

TEST(Generation, EveryPublishedSpecGenerates)
{
    for (auto const* name: { "naca0012", "nozzle", "outlet_total_pressure" })
    {
        SCOPED_TRACE(name);
        auto const spec = spec_fixture(name);
        auto llm = EchoContextLlm {};
        auto trail = Trail {};
        auto const dir = scratch_dir(std::string("generate_") + name);
        generate_case(spec, mini_kb(), llm, dir, trail);
        for (auto const& target: spec.target_files)
            EXPECT_TRUE(std::filesystem::is_regular_file(dir / target.target)) << target.target;
    }
}

TEST(Generation, FencedAnswersAreAccepted)
{
    auto spec = spec_fixture("pitzdaily");
    spec.target_files = { rag::SetupDescriptor::file("system/controlDict") };
    auto llm = ScriptedLlm({ "```cpp\napplication simpleFoam;\nendTime 100;\n```\n" });
    auto trail = Trail {};
    auto const dir = scratch_dir("generate_fenced");
    generate_case(spec, mini_kb(), llm, dir, trail);
    auto const tree = dict::parse_dictionary(read_text(dir / "system" / "controlDict")).tree;
    EXPECT_EQ(dict::node_text(*tree.find("application")), "simpleFoam");
}

TEST(Generation, UnparseableTwiceFails)
{
    auto spec = spec_fixture("pitzdaily");
    spec.target_files = { rag::SetupDescriptor::file("system/controlDict") };
    auto llm = ScriptedLlm({ "application simpleFoam", "endTime { 100;" });
    auto trail = Trail {};
    EXPECT_EQ(code_of([&] { generate_case(spec, mini_kb(), llm, scratch_dir("generate_unparseable"), trail); }),
              Errc::GenerationUnparseable);
    EXPECT_EQ(events(trail, "reask").size(), 1u);
    ASSERT_EQ(llm.prompts().size(), 2u);
    EXPECT_EQ(llm.prompts()[1].rfind(llm.prompts()[0], 0), 0u);
}

TEST(Generation, NoTargetsNoFiles)
{
    auto spec = spec_fixture("pitzdaily");
    spec.target_files.clear();
    auto llm = ScriptedLlm({});
    auto trail = Trail {};
    auto const dir = scratch_dir("generate_empty");
    generate_case(spec, mini_kb(), llm, dir, trail);
    EXPECT_TRUE(std::filesystem::is_empty(dir));
    EXPECT_TRUE(trail.events().empty());
    EXPECT_EQ(trail.jsonl(), "");
}

// Reflection -----------------------------------------------------------------------

class Scenarios: public ::testing::TestWithParam<std::string>
{};

TEST_P(Scenarios, ReproduceGoldenTrail)
{
    static auto const work = scratch_dir("scenarios");
    auto const run = test::run_scenario(fixtures(), work, GetParam());
    auto const& expect = run.definition.at("expect");
    EXPECT_EQ(run.exit_code, expect.at("exit").get<int>()) << run.err;
    auto const trail = parse_jsonl(run.trail);
    ASSERT_FALSE(trail.empty());
    auto const& outcome = trail.back();
    EXPECT_EQ(outcome.at("status"), expect.at("status"));
    EXPECT_EQ(outcome.at("runs"), expect.at("runs"));
    EXPECT_EQ(outcome.at("reflections"), expect.at("reflections"));
    if (expect.contains("reason"))
        EXPECT_EQ(outcome.at("reason"), expect.at("reason"));
    EXPECT_EQ(run.trail, read_text(run.golden));
}

INSTANTIATE_TEST_SUITE_P(Golden, Scenarios, ::testing::ValuesIn(test::scenario_names()));

TEST(Reflection, KeywordFixTakesTwoDiagnoses)
{
    auto const trail = parse_jsonl(read_text(fixtures() / "scenarios" / "keyword_fix" / "trail.golden.jsonl"));
    auto diagnoses = 0;
    for (auto const& event: trail)
        if (event.at("event") == "diagnosis")
        {
            ++diagnoses;
            EXPECT_EQ(event.at("keyword"), "div(phi,epsilon)");
        }
    EXPECT_EQ(diagnoses, 2);
    EXPECT_EQ(trail.back().at("runs"), 3);
}

TEST(Reflection, EveryWriteFollowsOneRetrieval)
{
    for (auto const& name: test::scenario_names())
    {
        SCOPED_TRACE(name);
        auto pending = 0;
        for (auto const& event: parse_jsonl(read_text(fixtures() / "scenarios" / name / "trail.golden.jsonl")))
        {
            auto const kind = event.at("event").get<std::string>();
            if (kind == "retrieval")
            {
                EXPECT_EQ(pending, 0);
                EXPECT_FALSE(event.at("strategy").get<std::string>().empty());
                ++pending;
            }
            else if (kind == "write")
            {
                EXPECT_EQ(pending, 1);
                pending = 0;
            }
        }
        EXPECT_EQ(pending, 0);
    }
}

TEST(Reflection, RoundsNeverExceedCap)
{
    auto const spec = spec_fixture("step_schemes");
    auto rng = test::Rng(31337);
    for (int trial = 0; trial < 8; ++trial)
    {
        auto const cap = std::uniform_int_distribution<int>(0, 12)(rng);
        // A fresh message on every run, keyed on an entry the mock never writes.
        auto script = json::parse(R"J({"faults": [{"file": "system/controlDict", "path": "neverWritten", "missing": true,
            "log": "--> FOAM FATAL ERROR: \nstage {tag} diverged\n"}], "steps": 20})J");
        auto executor = ScriptedExecutor(script);
        auto llm = EchoContextLlm {};
        auto trail = Trail {};
        auto const dir = scratch_dir("round_bound");
        generate_case(spec, mini_kb(), llm, dir, trail);
        auto const outcome = reflection_loop(dir, spec, mini_kb(), llm, executor, trail, AgentConfig { 5, 0.3, cap });
        EXPECT_FALSE(outcome.success);
        EXPECT_EQ(outcome.reason, "ReflectionThresholdExceeded");
        EXPECT_EQ(outcome.reflections, cap);
        EXPECT_EQ(outcome.runs, cap + 1);
        EXPECT_LE(static_cast<int>(events(trail, "diagnosis").size()), cap);
    }
}

TEST(Reflection, DeterministicWithMockedPorts)
{
    auto const spec = spec_fixture("outlet_total_pressure");
    auto script = json::parse(read_text(fixtures() / "scenarios" / "total_pressure" / "executor.json"));
    auto once = [&](std::string const& name) {
        auto executor = ScriptedExecutor(script);
        auto llm = EchoContextLlm {};
        auto trail = Trail {};
        run_case(spec, mini_kb(), llm, executor, scratch_dir(name), trail);
        return trail.jsonl();
    };
    EXPECT_EQ(once("deterministic_a"), once("deterministic_b"));
}

TEST(Reflection, MissingFileIsRegenerated)
{
    auto const spec = spec_fixture("pitzdaily");
    auto const dir = scratch_dir("missing_file");
    auto llm = EchoContextLlm {};
    auto trail = Trail {};
    generate_case(spec, mini_kb(), llm, dir, trail);
    std::filesystem::remove(dir / "0" / "nut");
    auto script = json::parse(R"J({"faults": [{"file": "0/nut", "absent": true,
        "log": "--> FOAM FATAL ERROR: \ncannot find file \"/case/0/nut\"\n"}], "steps": 20})J");
    auto executor = ScriptedExecutor(script);
    auto const outcome = reflection_loop(dir, spec, mini_kb(), llm, executor, trail);
    EXPECT_TRUE(outcome.success);
    EXPECT_EQ(outcome.reflections, 1);
    EXPECT_TRUE(std::filesystem::is_regular_file(dir / "0" / "nut"));
    auto const writes = events(trail, "write");
    EXPECT_EQ(writes.back().at("action"), "regenerate");
}

// Audit ------------------------------------------------------------------------------

TEST(Audit, ReportAndFilter)
{
    auto const text = read_text(fixtures() / "scenarios" / "keyword_fix" / "trail.golden.jsonl");
    auto const report = audit_report(text);
    ASSERT_EQ(report.size(), 4u);
    EXPECT_EQ(report[0].rfind("Generated system/controlDict (template, level 1;", 0), 0u);
    EXPECT_EQ(report[1].rfind("Generated system/fvSchemes (all_model, level 1;", 0), 0u);
    EXPECT_EQ(report[2].rfind("round 1: system/fvSchemes: Corrected div(phi,epsilon) using bounded Gauss upwind (keyword", 0), 0u);

    auto const filtered = audit_report(text, std::string { "div(phi,epsilon)" });
    ASSERT_EQ(filtered.size(), 3u);
    for (auto const& line: filtered)
        EXPECT_NE(line.find("div(phi,epsilon)"), std::string::npos);
    EXPECT_TRUE(audit_report(text, std::string { "div(phi,U)" }).size() == 1u);
    EXPECT_TRUE(audit_report("").empty());
    EXPECT_EQ(code_of([] { audit_report("{\"event\": \"write\"\nnot json\n"); }), Errc::SchemaViolation);
}

} // namespace
} // namespace foamrag::agent

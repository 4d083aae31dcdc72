// SPDX-License-Identifier: Apache-2.0
#pragma once

// Case generation and error reflection: CaseSpec loading, prompt
// assembly, LLM and executor ports, log classification and the loop itself.

#include <foamrag/foamdict.hpp>
#include <foamrag/kb.hpp>
#include <foamrag/rag.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace foamrag::agent
{

inline constexpr int DefaultReflectionCap = 30;
inline constexpr int PersistentThreshold = 3;
inline constexpr int SuccessSteps = 10;

// CaseSpec ------------------------------------------------------------------

struct CaseSpec
{
    std::string name;
    std::string solver;
    std::string turbulence_model;
    /// field -> patch -> {type, value, ...}; an "internalField" string per field is allowed
    nlohmann::ordered_json ic_bc = nlohmann::ordered_json::object();
    /// name -> {value, units}
    nlohmann::ordered_json physical_properties = nlohmann::ordered_json::object();
    std::vector<rag::SetupDescriptor> target_files;
    std::vector<std::string> mesh_boundary_names;
};

/// Throws Error(SchemaViolation) or Error(UnknownSolver).
CaseSpec load_case_spec(nlohmann::ordered_json const& document,
                        std::map<std::string, bool> const& compressibility = kb::builtin_compressibility());

CaseSpec load_case_spec_file(std::filesystem::path const& path,
                             std::map<std::string, bool> const& compressibility = kb::builtin_compressibility());

// Prompts --------------------------------------------------------------------

/// Slot values keyed by slot name. A slot missing from the map raises MissingSlot.
using Slots = std::map<std::string, std::string>;

std::string_view init_prompt_template();
std::string_view diagnostic_prompt_template();
std::string_view rewrite_prompt_template();

/// Replaces every `{name}` (and `{{name}}`) in one pass. Throws Error(MissingSlot).
std::string fill_slots(std::string_view text, Slots const& slots);

/// FoamFile header for a generated file.
dict::Dictionary file_header(std::string const& file);

/// Retrieved context as prompt text.
using Retrieved = std::variant<rag::ContextSet, rag::SetupTemplate>;

std::string retrieval_contents(Retrieved const& retrieved);
rag::AuditRecord const& retrieval_audit(Retrieved const& retrieved);

std::string assemble_init_prompt(CaseSpec const& spec, std::string const& file, Retrieved const& context);

struct ErrorDiagnosis
{
    rag::ErrorCategory category = rag::ErrorCategory::ComplexConfiguration;
    std::optional<rag::ErrorSubType> sub_type;
    std::string file;
    std::optional<std::string> keyword;
    std::optional<std::string> patch;
    std::string signature;
    std::vector<std::string> notes;
};

nlohmann::ordered_json diagnosis_to_json(ErrorDiagnosis const& diagnosis);

std::string assemble_diagnostic_prompt(ErrorDiagnosis const& diagnosis, std::string const& log,
                                       std::string const& file_content, CaseSpec const& spec, Retrieved const& context);

std::string assemble_rewrite_prompt(std::string const& file, std::string const& advice, std::string const& file_content,
                                    Retrieved const& context);

/// Drops a leading ```lang line and a trailing ``` line, if present.
std::string strip_code_fences(std::string_view response);

// Ports --------------------------------------------------------------------------

class LlmClient
{
public:
    virtual ~LlmClient() = default;
    virtual std::string send(std::string const& prompt) = 0;
    [[nodiscard]] virtual bool deterministic() const { return false; }
};

/// Hex FNV-1a 64 digest of a prompt; the replay fixture key.
std::string prompt_key(std::string_view prompt);

/// Answers from a JSON object {prompt_key: response}. Throws Error(ReplayMiss).
class ReplayLlm: public LlmClient
{
public:
    explicit ReplayLlm(nlohmann::ordered_json responses);
    static std::unique_ptr<ReplayLlm> from_file(std::filesystem::path const& path);
    std::string send(std::string const& prompt) override;
    [[nodiscard]] bool deterministic() const override { return true; }

private:
    nlohmann::ordered_json _responses;
};

/// Mock that answers from the retrieved context embedded in the prompt:
/// generation returns the first sample as a dictionary file, diagnosis names
/// the sample to apply, and rewriting applies it to the file. A keyword
/// snippet is never applied twice with the same value.
class EchoContextLlm: public LlmClient
{
public:
    std::string send(std::string const& prompt) override;
    [[nodiscard]] bool deterministic() const override { return true; }

private:
    std::map<std::string, std::set<std::string>> _tried;
};

/// Returns the given responses in order; Error(PortConfiguration) when exhausted.
class ScriptedLlm: public LlmClient
{
public:
    explicit ScriptedLlm(std::vector<std::string> responses);
    std::string send(std::string const& prompt) override;
    [[nodiscard]] bool deterministic() const override { return true; }
    [[nodiscard]] std::vector<std::string> const& prompts() const { return _prompts; }

private:
    std::vector<std::string> _responses;
    std::vector<std::string> _prompts;
    std::size_t _next = 0;
};

/// Forwards to another client and keeps every exchange for a replay fixture.
class RecordingLlm: public LlmClient
{
public:
    explicit RecordingLlm(LlmClient& inner);
    std::string send(std::string const& prompt) override;
    [[nodiscard]] bool deterministic() const override { return _inner.deterministic(); }
    [[nodiscard]] nlohmann::ordered_json const& recorded() const { return _recorded; }

private:
    LlmClient& _inner;
    nlohmann::ordered_json _recorded = nlohmann::ordered_json::object();
};

/// Runs a shell command with the prompt on standard input; the response is its standard output.
class CommandLlm: public LlmClient
{
public:
    explicit CommandLlm(std::string command);
    std::string send(std::string const& prompt) override;

private:
    std::string _command;
};

struct ExecutionResult
{
    bool success = false;
    int steps = 0;
    std::string log;
};

class Executor
{
public:
    virtual ~Executor() = default;
    virtual ExecutionResult run(std::filesystem::path const& case_dir) = 0;
};

/// Fault-driven stand-in for a solver run. Each run reports the first active
/// fault (in declaration order) as a failure, otherwise success.
///
///   {"faults": [{"file": "system/fvSchemes", "path": "divSchemes/div(phi,U)",
///                "equals": "Gauss linear" | "missing": true | "absent": true | "always": true,
///                "log": "... {tag} ..."}],
///    "steps": 50}
///
/// `{tag}` in a log becomes a letter code unique to the run.
class ScriptedExecutor: public Executor
{
public:
    explicit ScriptedExecutor(nlohmann::ordered_json script);
    static std::unique_ptr<ScriptedExecutor> from_file(std::filesystem::path const& path);
    ExecutionResult run(std::filesystem::path const& case_dir) override;
    [[nodiscard]] int runs() const { return _runs; }

private:
    nlohmann::ordered_json _script;
    int _runs = 0;
};

/// Runs a shell command inside the case directory; success needs exit 0 and
/// at least SuccessSteps "Time = " lines.
class CommandExecutor: public Executor
{
public:
    explicit CommandExecutor(std::string command);
    ExecutionResult run(std::filesystem::path const& case_dir) override;

private:
    std::string _command;
};

// Trail ------------------------------------------------------------------------

/// JSON-lines event log; each event is one compact JSON object.
class Trail
{
public:
    void add(nlohmann::ordered_json event);
    [[nodiscard]] std::vector<nlohmann::ordered_json> const& events() const { return _events; }
    [[nodiscard]] std::string jsonl() const;
    void write(std::filesystem::path const& path) const;

private:
    std::vector<nlohmann::ordered_json> _events;
};

// Classification -----------------------------------------------------------------

struct ReflectionState
{
    int round = 0;
    std::vector<nlohmann::ordered_json> history;
    std::map<std::string, int> signature_counts;
};

/// First line of the fatal-error block with digits masked.
std::string error_signature(std::string const& log);

/// Rule table, first match wins. Does not update `state`.
ErrorDiagnosis classify_error(std::string const& log, ReflectionState const& state);

// Generation and reflection ------------------------------------------------------

struct AgentConfig
{
    std::size_t n_max = rag::DefaultNMax;
    double tau = rag::DefaultTau;
    int reflection_cap = DefaultReflectionCap;
};

/// Retrieves for one setup file via the initialization dispatch.
Retrieved retrieve_for_init(kb::KnowledgeBase const& kb, CaseSpec const& spec, std::string const& file,
                            AgentConfig const& config, rag::Route const& route);

/// Generates every target file into case_dir. Throws Error(GenerationUnparseable).
void generate_case(CaseSpec const& spec, kb::KnowledgeBase const& kb, LlmClient& llm, std::filesystem::path const& case_dir,
                   Trail& trail, AgentConfig const& config = {});

struct Outcome
{
    bool success = false;
    std::string reason; ///< empty, "ReflectionThresholdExceeded" or "PersistentError"
    int runs = 0;
    int reflections = 0;
};

Outcome reflection_loop(std::filesystem::path const& case_dir, CaseSpec const& spec, kb::KnowledgeBase const& kb,
                        LlmClient& llm, Executor& executor, Trail& trail, AgentConfig const& config = {});

/// generate_case followed by reflection_loop; the trail is also written to case_dir/trail.jsonl.
Outcome run_case(CaseSpec const& spec, kb::KnowledgeBase const& kb, LlmClient& llm, Executor& executor,
                 std::filesystem::path const& case_dir, Trail& trail, AgentConfig const& config = {});

/// Human-readable decision report, one line per generated file or correction.
/// Throws Error(SchemaViolation) on a malformed line.
std::vector<std::string> audit_report(std::string const& trail_jsonl, std::optional<std::string> const& param = std::nullopt);

} // namespace foamrag::agent

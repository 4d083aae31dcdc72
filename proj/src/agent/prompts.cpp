// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>
#include <foamrag/error.hpp>

#include <fmt/format.h>

#include <cctype>

namespace foamrag::agent
{

using json = nlohmann::ordered_json;

namespace
{

constexpr std::string_view InitPrompt = R"PROMPT(SYSTEM_DEFINITION:
 "You are an Expert Computational Fluid Dynamics Engineer specializing in OpenFOAM. Your objective is to generate a syntactically correct and physically valid dictionary for the target file: '{file_name}'."

SYMBOLIC_CONTEXT_INJECTION:
 "The Symbolic Context Engine has extracted the following constraints. You must adhere to these rigid physical parameters:
  1. Initial & Boundary Conditions: {case_ic_bc}
  2. Physical Properties: {case_physical_properties}
  3. Validated Reference Samples or Guidelines: {retrieval_contents}"

INFERENCE_STRATEGY:
 "Follow this deterministic logic flow:
 1. Analyze Physical Relationships: Examine the boundary condition of fields (like U, p, T) and physical features to understand the simulation's physics.
 2. Consult Reference Samples: Use the provided reference files as a guide. Analyze common patterns, similar physical setups (e.g., RANS vs. LES, compressible vs. incompressible, solver).
 3. Make Logical Selections: Based on your analysis, determine the most suitable setups type."

OUTPUT_CONSTRAINTS:
 "- The final answer must properly include the header contents: {header}.
  - Output ONLY the complete file content inside a code block.
  - Do NOT include standard C++ decorated comments (e.g., the block starting with `/*-----...`).
  - Do NOT add explanations or reasoning text.")PROMPT";

constexpr std::string_view DiagnosticPrompt = R"PROMPT(SYSTEM_DEFINITION:
 "You are an Expert Computational Fluid Dynamics Engineer specializing in OpenFOAM. Your objective is to analyze the provided OpenFOAM Runtime Error and erroneous file contents, and give advice on correcting the file {{file_name}}."

SYMBOLIC_CONTEXT_INJECTION:
 "The Symbolic Context Engine has extracted the following constraints. You must adhere to these rigid physical parameters:
  1. Case Running Error: {running_error}
  2. Erroneous File Contents: {file_content}
  3. Initial & Boundary Conditions: {case_ic_bc}
  4. Physical Properties: {case_physical_properties}
  5. Validated Samples or Guidelines for Correction: {retrieval_contents}"

INFERENCE_STRATEGY:
 "Follow this deterministic logic flow:
 1. Provide a step-by-step fix. Ensure the advice addresses the error's technical cause. The advice must be a string.
 2. If the advice involves setting new values, the new values must be consistent with those in the Initial & Boundary Conditions and Physical Properties."

OUTPUT_CONSTRAINTS:
 " Absolutely AVOID any elements including but not limited to:
- Markdown code block markers (``` or ''')
- Extra comments or explanations
- Unnecessary empty lines or indentation")PROMPT";

// Second call of a correction round: applies the advice to the file. The
// output constraints are the diagnostic ones.
constexpr std::string_view RewritePrompt = R"PROMPT(SYSTEM_DEFINITION:
 "You are an Expert Computational Fluid Dynamics Engineer specializing in OpenFOAM. Apply the correction advice to the file '{file_name}' and return the corrected file."

SYMBOLIC_CONTEXT_INJECTION:
 "The correction must follow these inputs:
  1. Correction Advice: {advice}
  2. Current File Contents: {file_content}
  3. Validated Samples or Guidelines for Correction: {retrieval_contents}
  4. Required Header: {header}"

INFERENCE_STRATEGY:
 "Change only the entries the advice names. Keep every other entry of the current file as it is."

OUTPUT_CONSTRAINTS:
 " Absolutely AVOID any elements including but not limited to:
- Markdown code block markers (``` or ''')
- Extra comments or explanations
- Unnecessary empty lines or indentation")PROMPT";

bool isSlotName(std::string_view name)
{
    if (name.empty())
        return false;
    for (char c: name)
        if (!(std::islower(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    return true;
}

std::string headerText(std::string const& file)
{
    return "FoamFile " + dict::serialize_foam_inline(file_header(file));
}

std::string jsonSlot(json const& value)
{
    return value.dump(4);
}

} // namespace

std::string_view init_prompt_template()
{
    return InitPrompt;
}

std::string_view diagnostic_prompt_template()
{
    return DiagnosticPrompt;
}

std::string_view rewrite_prompt_template()
{
    return RewritePrompt;
}

std::string fill_slots(std::string_view text, Slots const& slots)
{
    auto out = std::string {};
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size())
    {
        if (text[i] != '{')
        {
            out += text[i++];
            continue;
        }
        auto const doubled = text.substr(i, 2) == "{{";
        auto const open = doubled ? 2 : 1;
        auto const close = text.find(doubled ? "}}" : "}", i + open);
        auto const name = close == std::string_view::npos ? std::string_view {} : text.substr(i + open, close - i - open);
        if (!isSlotName(name))
        {
            out += text[i++];
            continue;
        }
        auto const it = slots.find(std::string(name));
        if (it == slots.end())
            throw Error(Errc::MissingSlot, fmt::format("slot {} has no value", name));
        out += it->second;
        i = close + open;
    }
    return out;
}

dict::Dictionary file_header(std::string const& file)
{
    auto const slash = file.rfind('/');
    auto const object = slash == std::string::npos ? file : file.substr(slash + 1);
    auto cls = std::string { "dictionary" };
    if (file.rfind("0/", 0) == 0)
        cls = object == "U" || object.rfind("U.", 0) == 0 ? "volVectorField" : "volScalarField";
    auto header = dict::Dictionary {};
    header.set("version", dict::parse_value("2.0"));
    header.set("format", dict::parse_value("ascii"));
    header.set("class", dict::parse_value(cls));
    header.set("object", dict::parse_value(object));
    return header;
}

std::string retrieval_contents(Retrieved const& retrieved)
{
    if (auto const* setup = std::get_if<rag::SetupTemplate>(&retrieved))
        return jsonSlot(dict::to_json(setup->entries));
    return jsonSlot(rag::context_to_prompt_json(std::get<rag::ContextSet>(retrieved)));
}

rag::AuditRecord const& retrieval_audit(Retrieved const& retrieved)
{
    if (auto const* setup = std::get_if<rag::SetupTemplate>(&retrieved))
        return setup->audit;
    return std::get<rag::ContextSet>(retrieved).origin;
}

std::string assemble_init_prompt(CaseSpec const& spec, std::string const& file, Retrieved const& context)
{
    return fill_slots(InitPrompt, { { "file_name", file },
                                    { "case_ic_bc", jsonSlot(spec.ic_bc) },
                                    { "case_physical_properties", jsonSlot(spec.physical_properties) },
                                    { "retrieval_contents", retrieval_contents(context) },
                                    { "header", headerText(file) } });
}

json diagnosis_to_json(ErrorDiagnosis const& diagnosis)
{
    auto out = json { { "category", rag::to_string(diagnosis.category) } };
    if (diagnosis.sub_type)
        out["sub_type"] = rag::to_string(*diagnosis.sub_type);
    out["file"] = diagnosis.file;
    if (diagnosis.keyword)
        out["keyword"] = *diagnosis.keyword;
    if (diagnosis.patch)
        out["patch"] = *diagnosis.patch;
    out["signature"] = diagnosis.signature;
    if (!diagnosis.notes.empty())
        out["notes"] = diagnosis.notes;
    return out;
}

std::string assemble_diagnostic_prompt(ErrorDiagnosis const& diagnosis, std::string const& log,
                                       std::string const& file_content, CaseSpec const& spec, Retrieved const& context)
{
    return fill_slots(DiagnosticPrompt, { { "file_name", diagnosis.file },
                                          { "running_error", log },
                                          { "file_content", file_content },
                                          { "case_ic_bc", jsonSlot(spec.ic_bc) },
                                          { "case_physical_properties", jsonSlot(spec.physical_properties) },
                                          { "retrieval_contents", retrieval_contents(context) } });
}

std::string assemble_rewrite_prompt(std::string const& file, std::string const& advice, std::string const& file_content,
                                    Retrieved const& context)
{
    return fill_slots(RewritePrompt, { { "file_name", file },
                                       { "advice", advice },
                                       { "file_content", file_content },
                                       { "retrieval_contents", retrieval_contents(context) },
                                       { "header", headerText(file) } });
}

std::string strip_code_fences(std::string_view response)
{
    auto text = std::string(response);
    auto const first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text.compare(first, 3, "```") == 0)
    {
        auto const eol = text.find('\n', first);
        text = eol == std::string::npos ? std::string {} : text.substr(eol + 1);
    }
    auto const last = text.find_last_not_of(" \t\r\n");
    if (last != std::string::npos && last >= 2 && text.compare(last - 2, 3, "```") == 0)
    {
        auto const lineStart = text.rfind('\n', last - 2);
        text = lineStart == std::string::npos ? std::string {} : text.substr(0, lineStart + 1);
    }
    return text;
}

} // namespace foamrag::agent

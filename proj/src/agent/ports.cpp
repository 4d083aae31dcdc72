// SPDX-License-Identifier: Apache-2.0
#include <foamrag/agent.hpp>
#include <foamrag/error.hpp>
#include <foamrag/io.hpp>

#include <fmt/format.h>

#include <array>
#include <cstdio>
#include <sstream>
#include <sys/wait.h>

namespace foamrag::agent
{

using json = nlohmann::ordered_json;

namespace
{

std::optional<std::string> between(std::string const& text, std::string_view begin, std::string_view end)
{
    auto const start = text.find(begin);
    if (start == std::string::npos)
        return std::nullopt;
    auto const from = start + begin.size();
    auto const stop = text.find(end, from);
    if (stop == std::string::npos)
        return std::nullopt;
    return text.substr(from, stop - from);
}

json parseContents(std::optional<std::string> const& text)
{
    if (!text)
        return json::object();
    try
    {
        return json::parse(*text);
    }
    catch (nlohmann::json::exception const&)
    {
        return json::object();
    }
}

std::vector<json> samples(json const& contents)
{
    auto out = std::vector<json> {};
    for (std::size_t i = 0;; ++i)
    {
        auto const key = fmt::format("sample_setup_{}", i);
        if (!contents.contains(key))
            break;
        out.push_back(contents.at(key));
    }
    return out;
}

bool isPatchItem(json const& sample)
{
    return sample.is_object() && sample.contains("patch") && sample.contains("entry");
}

dict::Dictionary withoutHeader(dict::Dictionary const& tree)
{
    auto out = dict::Dictionary {};
    for (auto const& entry: tree)
        if (entry.key != "FoamFile")
            out.set(entry.key, entry.value);
    return out;
}

std::string render(std::string const& header, dict::Dictionary const& body)
{
    auto text = header + "\n\n";
    if (!body.empty())
        text += dict::serialize_foam(body);
    return text;
}

// Initialization: the first sample (or the template) as a file body.
std::string echoInit(std::string const& prompt)
{
    auto const contents =
        parseContents(between(prompt, "3. Validated Reference Samples or Guidelines: ", "\"\n\nINFERENCE_STRATEGY:"));
    auto const header = between(prompt, "header contents: ", ".\n  - Output ONLY").value_or("");
    auto body = dict::Dictionary {};
    auto const found = samples(contents);
    if (!found.empty() && isPatchItem(found.front()))
    {
        auto boundary = dict::Dictionary {};
        boundary.set(found.front().at("patch").get<std::string>(), dict::node_from_json(found.front().at("entry")));
        body.set("boundaryField", dict::ConfigNode { std::move(boundary) });
    }
    else if (!found.empty())
        body = withoutHeader(dict::tree_from_json(found.front()));
    else
    {
        auto only = contents;
        only.erase("guidance");
        body = withoutHeader(dict::tree_from_json(only));
    }
    return "```foam\n" + render(header, body) + "```\n";
}

std::string echoAdvice(std::string const& prompt)
{
    auto const contents =
        parseContents(between(prompt, "5. Validated Samples or Guidelines for Correction: ", "\"\n\nINFERENCE_STRATEGY:"));
    if (contents.empty())
        return "No validated sample is available; keep the file unchanged.";
    return "Replace the failing entries with the validated samples.";
}

dict::ConfigNode* findFirst(dict::Dictionary& tree, std::string const& key)
{
    for (auto& entry: tree)
    {
        if (entry.key == key)
            return &entry.value;
        if (entry.value.is_dict())
            if (auto* found = findFirst(entry.value.as_dict(), key))
                return found;
    }
    return nullptr;
}

using Tried = std::map<std::string, std::set<std::string>>;

void applySnippets(dict::Dictionary& tree, std::vector<json> const& found, Tried& tried)
{
    auto const& first = found.front();
    auto const key = first.begin().key();
    auto* current = findFirst(tree, key);
    if (!current)
        return;
    auto& seen = tried[key];
    seen.insert(dict::canonical_json(*current));
    for (auto const& sample: found)
    {
        if (!sample.contains(key))
            continue;
        auto candidate = dict::node_from_json(sample.at(key));
        if (seen.insert(dict::canonical_json(candidate)).second)
        {
            *current = std::move(candidate);
            return;
        }
    }
}

void applyPatchItems(dict::Dictionary& tree, std::vector<json> const& found)
{
    auto* boundary = tree.find("boundaryField");
    if (!boundary || !boundary->is_dict())
        return;
    for (auto& patch: boundary->as_dict())
    {
        if (!patch.value.is_dict() || !patch.value.as_dict().find("type"))
            continue;
        auto const type = patch.value.as_dict().find("type")->text();
        for (auto const& sample: found)
        {
            auto const entry = dict::node_from_json(sample.at("entry"));
            if (!entry.is_dict() || !entry.as_dict().find("type") || entry.as_dict().find("type")->text() != type)
                continue;
            for (auto const& item: entry.as_dict())
                if (!patch.value.as_dict().find(item.key))
                    patch.value.as_dict().set(item.key, item.value);
            break;
        }
    }
}

void applyTemplate(dict::Dictionary& tree, dict::Dictionary const& setup)
{
    for (auto const& entry: setup)
    {
        auto* existing = tree.find(entry.key);
        if (entry.value.is_dict() && existing && existing->is_dict())
        {
            for (auto const& child: entry.value.as_dict())
                existing->as_dict().set(child.key, child.value);
            continue;
        }
        tree.set(entry.key, entry.value);
    }
}

// Rewrite: applies the samples to the current file.
std::string echoRewrite(std::string const& prompt, Tried& tried)
{
    auto const content = between(prompt, "2. Current File Contents: ", "\n  3. Validated Samples or Guidelines for Correction: ");
    auto const contents = parseContents(
        between(prompt, "3. Validated Samples or Guidelines for Correction: ", "\n  4. Required Header: "));
    auto const header = between(prompt, "4. Required Header: ", "\"\n\nINFERENCE_STRATEGY:").value_or("");
    auto tree = withoutHeader(dict::parse_dictionary(content.value_or("")).tree);
    auto const found = samples(contents);
    if (!found.empty() && isPatchItem(found.front()))
        applyPatchItems(tree, found);
    else if (!found.empty() && found.front().is_object() && found.front().size() == 1)
        applySnippets(tree, found, tried);
    else if (!found.empty())
    {
        auto const sample = withoutHeader(dict::tree_from_json(found.front()));
        for (auto const& entry: sample)
            if (!tree.find(entry.key))
                tree.set(entry.key, entry.value);
    }
    else if (!contents.empty() && !contents.contains("guidance"))
        applyTemplate(tree, withoutHeader(dict::tree_from_json(contents)));
    return render(header, tree);
}

std::string letterTag(int n)
{
    auto tag = std::string {};
    do
    {
        tag.insert(tag.begin(), static_cast<char>('a' + n % 26));
        n /= 26;
    } while (n > 0);
    return tag;
}

dict::ConfigNode const* lookup(dict::Dictionary const& tree, std::string const& path)
{
    auto const* current = &tree;
    auto stream = std::istringstream(path);
    auto parts = std::vector<std::string> {};
    for (std::string part; std::getline(stream, part, '/');)
        parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i)
    {
        auto const* node = current->find(parts[i]);
        if (!node)
            return nullptr;
        if (i + 1 == parts.size())
            return node;
        if (!node->is_dict())
            return nullptr;
        current = &node->as_dict();
    }
    return nullptr;
}

bool faultActive(json const& fault, std::filesystem::path const& case_dir)
{
    if (fault.value("always", false))
        return true;
    auto const file = case_dir / fault.value("file", std::string {});
    auto const exists = std::filesystem::is_regular_file(file);
    if (fault.value("absent", false))
        return !exists;
    if (!exists)
        return fault.value("missing", false) || fault.contains("not_equals");
    auto const tree = dict::parse_dictionary(read_text(file)).tree;
    auto const* node = lookup(tree, fault.value("path", std::string {}));
    if (fault.value("missing", false))
        return node == nullptr;
    if (fault.contains("equals"))
        return node && dict::node_text(*node) == fault.at("equals").get<std::string>();
    if (fault.contains("not_equals"))
        return !node || dict::node_text(*node) != fault.at("not_equals").get<std::string>();
    throw Error(Errc::PortConfiguration, "executor fault needs always, absent, missing, equals or not_equals");
}

struct CommandResult
{
    int status = -1;
    std::string output;
};

CommandResult runCommand(std::string const& command)
{
    auto* pipe = ::popen(command.c_str(), "r");
    if (!pipe)
        throw Error(Errc::ExecutorUnavailable, fmt::format("cannot start: {}", command));
    auto result = CommandResult {};
    auto buffer = std::array<char, 4096> {};
    while (auto const n = std::fread(buffer.data(), 1, buffer.size(), pipe))
        result.output.append(buffer.data(), n);
    auto const status = ::pclose(pipe);
    result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string shellQuote(std::string const& text)
{
    auto out = std::string { "'" };
    for (char c: text)
        out += c == '\'' ? std::string { "'\\''" } : std::string(1, c);
    return out + "'";
}

} // namespace

std::string prompt_key(std::string_view prompt)
{
    auto hash = std::uint64_t { 0xcbf29ce484222325ULL };
    for (unsigned char c: prompt)
    {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", hash);
}

ReplayLlm::ReplayLlm(json responses): _responses(std::move(responses))
{
    if (!_responses.is_object())
        throw Error(Errc::PortConfiguration, "replay fixture must be a JSON object");
}

std::unique_ptr<ReplayLlm> ReplayLlm::from_file(std::filesystem::path const& path)
{
    try
    {
        return std::make_unique<ReplayLlm>(json::parse(read_text(path)));
    }
    catch (nlohmann::json::exception const& error)
    {
        throw Error(Errc::PortConfiguration, fmt::format("{}: {}", path.string(), error.what()));
    }
    catch (Error const& error)
    {
        throw Error(Errc::PortConfiguration, error.what());
    }
}

std::string ReplayLlm::send(std::string const& prompt)
{
    auto const key = prompt_key(prompt);
    if (!_responses.contains(key) || !_responses.at(key).is_string())
        throw Error(Errc::ReplayMiss, fmt::format("no recorded response for prompt {}", key));
    return _responses.at(key).get<std::string>();
}

std::string EchoContextLlm::send(std::string const& prompt)
{
    if (prompt.find("1. Correction Advice: ") != std::string::npos)
        return echoRewrite(prompt, _tried);
    if (prompt.find("give advice on correcting the file") != std::string::npos)
        return echoAdvice(prompt);
    if (prompt.find("generate a syntactically correct") != std::string::npos)
        return echoInit(prompt);
    return "";
}

ScriptedLlm::ScriptedLlm(std::vector<std::string> responses): _responses(std::move(responses)) {}

std::string ScriptedLlm::send(std::string const& prompt)
{
    _prompts.push_back(prompt);
    if (_next >= _responses.size())
        throw Error(Errc::PortConfiguration, "scripted LLM has no response left");
    return _responses[_next++];
}

RecordingLlm::RecordingLlm(LlmClient& inner): _inner(inner) {}

std::string RecordingLlm::send(std::string const& prompt)
{
    auto response = _inner.send(prompt);
    _recorded[prompt_key(prompt)] = response;
    return response;
}

CommandLlm::CommandLlm(std::string command): _command(std::move(command))
{
    if (_command.empty())
        throw Error(Errc::PortConfiguration, "LLM command is empty");
}

std::string CommandLlm::send(std::string const& prompt)
{
    auto const file = std::filesystem::temp_directory_path() / fmt::format("foamrag_prompt_{}.txt", prompt_key(prompt));
    write_text(file, prompt);
    auto const result = runCommand(fmt::format("{} < {}", _command, shellQuote(file.string())));
    std::filesystem::remove(file);
    if (result.status != 0)
        throw Error(Errc::PortConfiguration, fmt::format("LLM command exited with status {}", result.status));
    return result.output;
}

ScriptedExecutor::ScriptedExecutor(json script): _script(std::move(script))
{
    if (!_script.is_object() || (_script.contains("faults") && !_script.at("faults").is_array()))
        throw Error(Errc::PortConfiguration, "executor script must be an object with a \"faults\" array");
}

std::unique_ptr<ScriptedExecutor> ScriptedExecutor::from_file(std::filesystem::path const& path)
{
    try
    {
        return std::make_unique<ScriptedExecutor>(json::parse(read_text(path)));
    }
    catch (nlohmann::json::exception const& error)
    {
        throw Error(Errc::PortConfiguration, fmt::format("{}: {}", path.string(), error.what()));
    }
    catch (Error const& error)
    {
        throw Error(Errc::PortConfiguration, error.what());
    }
}

ExecutionResult ScriptedExecutor::run(std::filesystem::path const& case_dir)
{
    auto const tag = letterTag(_runs++);
    if (_script.contains("faults"))
    {
        for (auto const& fault: _script.at("faults"))
        {
            if (!faultActive(fault, case_dir))
                continue;
            auto log = fault.value("log", std::string { "--> FOAM FATAL ERROR:\nscripted failure\n" });
            for (auto pos = log.find("{tag}"); pos != std::string::npos; pos = log.find("{tag}", pos + tag.size()))
                log.replace(pos, 5, tag);
            return ExecutionResult { false, 0, std::move(log) };
        }
    }
    auto const steps = _script.value("steps", 50);
    auto log = std::string {};
    for (int i = 1; i <= steps; ++i)
        log += fmt::format("Time = {}\n", i);
    return ExecutionResult { steps >= SuccessSteps, steps, log + "End\n" };
}

CommandExecutor::CommandExecutor(std::string command): _command(std::move(command))
{
    if (_command.empty())
        throw Error(Errc::PortConfiguration, "executor command is empty");
}

ExecutionResult CommandExecutor::run(std::filesystem::path const& case_dir)
{
    auto const result = runCommand(fmt::format("cd {} && {} 2>&1", shellQuote(case_dir.string()), _command));
    if (result.status == 127)
        throw Error(Errc::ExecutorUnavailable, fmt::format("command not found: {}", _command));
    auto steps = 0;
    auto stream = std::istringstream(result.output);
    for (std::string line; std::getline(stream, line);)
        if (line.rfind("Time = ", 0) == 0)
            ++steps;
    auto const success = result.status == 0 && steps >= SuccessSteps;
    auto log = result.output;
    if (!success && log.empty())
        log = fmt::format("command exited with status {} after {} steps\n", result.status, steps);
    return ExecutionResult { success, steps, std::move(log) };
}

} // namespace foamrag::agent

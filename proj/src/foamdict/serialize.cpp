// SPDX-License-Identifier: Apache-2.0
#include <foamrag/foamdict.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <charconv>

namespace foamrag::dict
{

namespace
{

std::string doubleText(double value)
{
    char buffer[64];
    auto const [ptr, ec] = std::to_chars(std::begin(buffer), std::end(buffer), value);
    auto text = std::string(buffer, ptr);
    // Keep the token a floating-point literal so it re-reads as one.
    if (text.find_first_of(".eEni") == std::string::npos)
        text += ".0";
    return text;
}

bool isRawKey(std::string_view key)
{
    return key.substr(0, RawKeyPrefix.size()) == RawKeyPrefix;
}

bool containsDict(List const& list)
{
    return std::any_of(list.items.begin(), list.items.end(), [](ConfigNode const& n) { return n.is_dict(); });
}

void checkRaw(Raw const& raw, bool keyless, bool inList)
{
    auto const& text = raw.text;
    if (text.empty())
        throw Error(Errc::RawEmissionConflict, "empty raw node");
    if ((keyless || inList) && text.front() != '#' && text.front() != '$')
        throw Error(Errc::RawEmissionConflict, fmt::format("raw node '{}' is neither a directive nor a macro", text));
    if (inList && text.front() == '#')
        throw Error(Errc::RawEmissionConflict, fmt::format("directive '{}' cannot appear inside a list", text));
    if (keyless && text.front() == '$' && text.back() != ';')
        throw Error(Errc::RawEmissionConflict, fmt::format("keyless macro '{}' must end with ';'", text));
}

std::string inlineList(List const& list);

std::string inlineItem(ConfigNode const& node)
{
    switch (node.kind())
    {
        case NodeKind::Scalar: return scalar_text(node.as_scalar());
        case NodeKind::List: return inlineList(node.as_list());
        case NodeKind::Dict: return serialize_foam_inline(node.as_dict());
        case NodeKind::Raw:
            checkRaw(node.as_raw(), false, true);
            return node.as_raw().text;
    }
    return {};
}

std::string inlineList(List const& list)
{
    std::string out = "(";
    for (std::size_t i = 0; i < list.items.size(); ++i)
    {
        if (i > 0)
            out += ' ';
        out += inlineItem(list.items[i]);
    }
    out += ')';
    return out;
}

class FoamWriter
{
public:
    std::string take() { return std::move(_out); }

    void dictionary(Dictionary const& dict, int depth)
    {
        auto first = true;
        for (auto const& entry: dict)
        {
            if (depth == 0 && !first)
                _out += '\n';
            first = false;
            this->entry(entry.key, entry.value, depth);
        }
    }

private:
    void pad(int depth) { _out.append(static_cast<std::size_t>(depth) * 4, ' '); }

    void entry(std::string const& key, ConfigNode const& value, int depth)
    {
        switch (value.kind())
        {
            case NodeKind::Raw:
            {
                auto const keyless = isRawKey(key);
                checkRaw(value.as_raw(), keyless, false);
                pad(depth);
                if (keyless)
                    _out += value.as_raw().text + "\n";
                else
                    _out += key + ' ' + value.as_raw().text + ";\n";
                return;
            }
            case NodeKind::Dict:
                pad(depth);
                _out += key + '\n';
                block(value.as_dict(), depth);
                return;
            case NodeKind::List:
            {
                auto const& list = value.as_list();
                pad(depth);
                if (!containsDict(list))
                {
                    _out += key + ' ' + inlineList(list) + ";\n";
                    return;
                }
                _out += key + '\n';
                multilineList(list, depth);
                _out.insert(_out.size() - 1, ";");
                return;
            }
            case NodeKind::Scalar:
            {
                auto const text = scalar_text(value.as_scalar());
                pad(depth);
                _out += text.empty() ? key + ";\n" : key + ' ' + text + ";\n";
                return;
            }
        }
    }

    void block(Dictionary const& dict, int depth)
    {
        pad(depth);
        _out += "{\n";
        dictionary(dict, depth + 1);
        pad(depth);
        _out += "}\n";
    }

    void multilineList(List const& list, int depth)
    {
        pad(depth);
        _out += "(\n";
        for (auto const& item: list.items)
        {
            if (item.is_dict())
            {
                block(item.as_dict(), depth + 1);
            }
            else if (item.is_list() && containsDict(item.as_list()))
            {
                multilineList(item.as_list(), depth + 1);
            }
            else
            {
                pad(depth + 1);
                _out += inlineItem(item) + '\n';
            }
        }
        pad(depth);
        _out += ")\n";
    }

    std::string _out;
};

} // namespace

std::string scalar_text(Scalar const& scalar)
{
    struct Visitor
    {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return doubleText(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(Word const& w) const { return w.text; }
        std::string operator()(QuotedString const& q) const { return '"' + q.text + '"'; }
        std::string operator()(TokenRun const& r) const { return r.text; }
        std::string operator()(DimensionVector const& d) const
        {
            return fmt::format("[{}]", fmt::join(d.exponents, " "));
        }
    };
    return std::visit(Visitor {}, scalar);
}

std::string node_text(ConfigNode const& node)
{
    if (node.is_raw())
        return node.as_raw().text;
    return inlineItem(node);
}

std::string serialize_foam(ConfigTree const& tree)
{
    auto writer = FoamWriter {};
    writer.dictionary(tree, 0);
    return writer.take();
}

std::string serialize_foam_inline(Dictionary const& dict)
{
    std::string out = "{";
    for (auto const& entry: dict)
    {
        out += ' ';
        auto const& value = entry.value;
        if (value.is_raw() && isRawKey(entry.key))
        {
            out += value.as_raw().text;
            continue;
        }
        out += entry.key;
        if (value.is_dict())
        {
            out += ' ' + serialize_foam_inline(value.as_dict());
            continue;
        }
        auto const text = node_text(value);
        if (!text.empty())
            out += ' ' + text;
        out += ';';
    }
    out += " }";
    return out;
}

// JSON ----------------------------------------------------------------------

nlohmann::ordered_json to_json(Dictionary const& dict)
{
    auto object = nlohmann::ordered_json::object();
    for (auto const& entry: dict)
    {
        if (entry.value.is_raw() && isRawKey(entry.key))
            object[entry.key] = entry.value.as_raw().text;
        else
            object[entry.key] = to_json(entry.value);
    }
    return object;
}

nlohmann::ordered_json to_json(ConfigNode const& node)
{
    using json = nlohmann::ordered_json;
    switch (node.kind())
    {
        case NodeKind::Dict: return to_json(node.as_dict());
        case NodeKind::Raw: return json { { std::string(RawKeyPrefix), node.as_raw().text } };
        case NodeKind::List:
        {
            auto array = json::array();
            for (auto const& item: node.as_list().items)
                array.push_back(to_json(item));
            auto const& items = node.as_list().items;
            auto const looksDimensional = items.size() == 7
                                          && std::all_of(items.begin(), items.end(), [](ConfigNode const& n) {
                                                 return n.is_scalar() && std::holds_alternative<std::int64_t>(n.as_scalar());
                                             });
            if (looksDimensional)
                return json { { "__list__", array } };
            return array;
        }
        case NodeKind::Scalar:
        {
            struct Visitor
            {
                json operator()(std::int64_t v) const { return v; }
                json operator()(double v) const { return v; }
                json operator()(bool v) const { return v; }
                json operator()(Word const& w) const { return w.text; }
                json operator()(QuotedString const& q) const { return '"' + q.text + '"'; }
                json operator()(TokenRun const& r) const { return r.text; }
                json operator()(DimensionVector const& d) const
                {
                    auto array = json::array();
                    for (auto e: d.exponents)
                        array.push_back(e);
                    return array;
                }
            };
            return std::visit(Visitor {}, node.as_scalar());
        }
    }
    return nullptr;
}

std::string serialize_json(ConfigTree const& tree)
{
    return to_json(tree).dump(4) + "\n";
}

std::string canonical_json(ConfigNode const& node)
{
    return to_json(node).dump();
}

ConfigNode node_from_json(nlohmann::ordered_json const& json)
{
    switch (json.type())
    {
        case nlohmann::json::value_t::object:
        {
            auto const rawKey = std::string(RawKeyPrefix);
            if (json.size() == 1 && json.contains(rawKey) && json.at(rawKey).is_string())
                return ConfigNode { Raw { json.at(rawKey).get<std::string>() } };
            if (json.size() == 1 && json.contains("__list__") && json.at("__list__").is_array())
            {
                auto list = List {};
                for (auto const& item: json.at("__list__"))
                    list.items.push_back(node_from_json(item));
                return ConfigNode { std::move(list) };
            }
            return ConfigNode { tree_from_json(json) };
        }
        case nlohmann::json::value_t::array:
        {
            auto const dimensional = json.size() == 7
                                     && std::all_of(json.begin(), json.end(), [](auto const& v) {
                                            return v.is_number_integer();
                                        });
            if (dimensional)
            {
                auto dims = DimensionVector {};
                for (std::size_t k = 0; k < 7; ++k)
                    dims.exponents[k] = json[k].template get<int>();
                return ConfigNode { Scalar { dims } };
            }
            auto list = List {};
            for (auto const& item: json)
                list.items.push_back(node_from_json(item));
            return ConfigNode { std::move(list) };
        }
        case nlohmann::json::value_t::string: return parse_value(json.get<std::string>());
        case nlohmann::json::value_t::boolean: return ConfigNode { Scalar { json.get<bool>() } };
        case nlohmann::json::value_t::number_integer:
        case nlohmann::json::value_t::number_unsigned: return ConfigNode { Scalar { json.get<std::int64_t>() } };
        case nlohmann::json::value_t::number_float: return ConfigNode { Scalar { json.get<double>() } };
        default: return ConfigNode { Scalar { TokenRun {} } };
    }
}

ConfigTree tree_from_json(nlohmann::ordered_json const& json)
{
    auto tree = ConfigTree {};
    if (!json.is_object())
        return tree;
    for (auto const& [key, value]: json.items())
    {
        if (isRawKey(key) && value.is_string())
            tree.set(key, ConfigNode { Raw { value.get<std::string>() } });
        else
            tree.set(key, node_from_json(value));
    }
    return tree;
}

} // namespace foamrag::dict

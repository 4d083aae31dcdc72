// SPDX-License-Identifier: Apache-2.0
#include <foamrag/foamdict.hpp>

#include <algorithm>

namespace foamrag::dict
{

Dictionary::Dictionary() = default;
Dictionary::Dictionary(Dictionary const&) = default;
Dictionary::Dictionary(Dictionary&&) noexcept = default;
Dictionary& Dictionary::operator=(Dictionary const&) = default;
Dictionary& Dictionary::operator=(Dictionary&&) noexcept = default;
Dictionary::~Dictionary() = default;

ConfigNode const* Dictionary::find(std::string_view key) const
{
    auto const it = std::find_if(_entries.begin(), _entries.end(), [&](Entry const& e) { return e.key == key; });
    return it == _entries.end() ? nullptr : &it->value;
}

ConfigNode* Dictionary::find(std::string_view key)
{
    auto const it = std::find_if(_entries.begin(), _entries.end(), [&](Entry const& e) { return e.key == key; });
    return it == _entries.end() ? nullptr : &it->value;
}

Dictionary const* Dictionary::find_dict(std::string_view key) const
{
    auto const* node = find(key);
    return node && node->is_dict() ? &node->as_dict() : nullptr;
}

bool Dictionary::set(std::string key, ConfigNode value)
{
    if (auto* existing = find(key))
    {
        *existing = std::move(value);
        return true;
    }
    _entries.push_back(Entry { std::move(key), std::move(value) });
    return false;
}

bool Dictionary::erase(std::string_view key)
{
    auto const it = std::find_if(_entries.begin(), _entries.end(), [&](Entry const& e) { return e.key == key; });
    if (it == _entries.end())
        return false;
    _entries.erase(it);
    return true;
}

std::size_t Dictionary::size() const
{
    return _entries.size();
}

bool Dictionary::empty() const
{
    return _entries.empty();
}

Dictionary::const_iterator Dictionary::begin() const
{
    return _entries.begin();
}

Dictionary::const_iterator Dictionary::end() const
{
    return _entries.end();
}

Dictionary::iterator Dictionary::begin()
{
    return _entries.begin();
}

Dictionary::iterator Dictionary::end()
{
    return _entries.end();
}

bool Dictionary::operator==(Dictionary const& other) const
{
    return _entries == other._entries;
}

bool List::operator==(List const& other) const
{
    return items == other.items;
}

ConfigNode::ConfigNode() = default;
ConfigNode::ConfigNode(Dictionary value): _value(std::move(value)) {}
ConfigNode::ConfigNode(List value): _value(std::move(value)) {}
ConfigNode::ConfigNode(Scalar value): _value(std::move(value)) {}
ConfigNode::ConfigNode(Raw value): _value(std::move(value)) {}

NodeKind ConfigNode::kind() const
{
    return static_cast<NodeKind>(_value.index());
}

std::string ConfigNode::text() const
{
    if (!is_scalar())
        return {};
    auto const& scalar = as_scalar();
    if (auto const* w = std::get_if<Word>(&scalar))
        return w->text;
    if (auto const* q = std::get_if<QuotedString>(&scalar))
        return q->text;
    if (auto const* r = std::get_if<TokenRun>(&scalar))
        return r->text;
    return {};
}

} // namespace foamrag::dict

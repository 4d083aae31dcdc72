// SPDX-License-Identifier: Apache-2.0
#pragma once

// OpenFOAM dictionary model: an ordered tree of dictionaries, lists, scalar
// leaves and raw (verbatim) nodes, with a parser and two serializers
// (OpenFOAM syntax and canonical JSON).
//
// Raw nodes hold directives (#include, #codeStream, ...) and macro
// references ($var) exactly as written, minus comments. Keyless raw entries
// live in their parent dictionary under the synthetic key "__raw__<n>".

#include <foamrag/error.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace foamrag::dict
{

inline constexpr std::string_view RawKeyPrefix = "__raw__";

struct Word
{
    std::string text;
    bool operator==(Word const&) const = default;
};

/// Content between the quotes, escapes kept verbatim.
struct QuotedString
{
    std::string text;
    bool operator==(QuotedString const&) const = default;
};

/// Multi-token value such as `Gauss linearUpwind grad(U)` or
/// `uniform (0 0 0)`, stored with normalized single-space separation.
struct TokenRun
{
    std::string text;
    bool operator==(TokenRun const&) const = default;
};

/// SI exponents [mass length time temperature moles current luminosity].
struct DimensionVector
{
    std::array<int, 7> exponents {};
    bool operator==(DimensionVector const&) const = default;
};

using Scalar = std::variant<std::int64_t, double, bool, Word, QuotedString, DimensionVector, TokenRun>;

struct Raw
{
    std::string text;
    bool operator==(Raw const&) const = default;
};

class ConfigNode;
struct Entry;

/// Ordered dictionary; keys are unique among siblings.
class Dictionary
{
public:
    using iterator = std::vector<Entry>::iterator;
    using const_iterator = std::vector<Entry>::const_iterator;

    Dictionary();
    Dictionary(Dictionary const&);
    Dictionary(Dictionary&&) noexcept;
    Dictionary& operator=(Dictionary const&);
    Dictionary& operator=(Dictionary&&) noexcept;
    ~Dictionary();

    [[nodiscard]] ConfigNode const* find(std::string_view key) const;
    [[nodiscard]] ConfigNode* find(std::string_view key);
    [[nodiscard]] bool contains(std::string_view key) const { return find(key) != nullptr; }

    /// Returns the sub-dictionary at `key`, or nullptr when absent or not a dictionary.
    [[nodiscard]] Dictionary const* find_dict(std::string_view key) const;

    /// Replaces in place when the key exists; appends otherwise. Returns true on replacement.
    bool set(std::string key, ConfigNode value);
    bool erase(std::string_view key);

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] bool empty() const;
    [[nodiscard]] const_iterator begin() const;
    [[nodiscard]] const_iterator end() const;
    [[nodiscard]] iterator begin();
    [[nodiscard]] iterator end();

    bool operator==(Dictionary const& other) const;

private:
    std::vector<Entry> _entries;
};

struct List
{
    std::vector<ConfigNode> items;
    bool operator==(List const& other) const;
};

enum class NodeKind
{
    Dict,
    List,
    Scalar,
    Raw,
};

class ConfigNode
{
public:
    ConfigNode();
    ConfigNode(Dictionary value);
    ConfigNode(List value);
    ConfigNode(Scalar value);
    ConfigNode(Raw value);

    [[nodiscard]] NodeKind kind() const;
    [[nodiscard]] bool is_dict() const { return kind() == NodeKind::Dict; }
    [[nodiscard]] bool is_list() const { return kind() == NodeKind::List; }
    [[nodiscard]] bool is_scalar() const { return kind() == NodeKind::Scalar; }
    [[nodiscard]] bool is_raw() const { return kind() == NodeKind::Raw; }

    [[nodiscard]] Dictionary const& as_dict() const { return std::get<Dictionary>(_value); }
    [[nodiscard]] Dictionary& as_dict() { return std::get<Dictionary>(_value); }
    [[nodiscard]] List const& as_list() const { return std::get<List>(_value); }
    [[nodiscard]] Scalar const& as_scalar() const { return std::get<Scalar>(_value); }
    [[nodiscard]] Raw const& as_raw() const { return std::get<Raw>(_value); }

    /// Word, quoted-string content or token-run text; empty for anything else.
    [[nodiscard]] std::string text() const;

    bool operator==(ConfigNode const& other) const = default;

private:
    std::variant<Dictionary, List, Scalar, Raw> _value;
};

struct Entry
{
    std::string key;
    ConfigNode value;
    bool operator==(Entry const&) const = default;
};

/// Root of one dictionary file.
using ConfigTree = Dictionary;

struct ParseWarning
{
    SourcePosition position;
    std::string message;
};

struct ParseResult
{
    ConfigTree tree;
    std::vector<ParseWarning> warnings;
};

/// Parses OpenFOAM dictionary text. Throws ParseError (UnbalancedDelimiters,
/// MissingSemicolon, UnexpectedToken, InvalidEncoding).
ParseResult parse_dictionary(std::string_view text);

/// Parses a value as it would appear between a key and its terminating `;`.
ConfigNode parse_value(std::string_view text);

/// OpenFOAM syntax, 4-space indent, one entry per line, no banner.
/// Throws Error(RawEmissionConflict) for a raw node that cannot be emitted
/// where it sits.
std::string serialize_foam(ConfigTree const& tree);

/// Single-line OpenFOAM rendering `{ key value; ... }` of a dictionary.
std::string serialize_foam_inline(Dictionary const& dict);

/// Text of a scalar as it appears in OpenFOAM syntax.
std::string scalar_text(Scalar const& scalar);

/// Text of any node in compact OpenFOAM form (lists and dictionaries inline).
std::string node_text(ConfigNode const& node);

nlohmann::ordered_json to_json(ConfigNode const& node);
nlohmann::ordered_json to_json(Dictionary const& dict);

/// Canonical JSON document (4-space indent, LF, trailing newline).
std::string serialize_json(ConfigTree const& tree);

/// Compact canonical JSON of a node; used as a value identity.
std::string canonical_json(ConfigNode const& node);

/// Inverse of to_json. Strings are re-read with the dictionary lexer so that
/// words, token runs and quoted strings come back as the same scalar kind.
ConfigNode node_from_json(nlohmann::ordered_json const& json);
ConfigTree tree_from_json(nlohmann::ordered_json const& json);

/// True when `text` is valid UTF-8.
bool is_valid_utf8(std::string_view text);

} // namespace foamrag::dict

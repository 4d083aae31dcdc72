// SPDX-License-Identifier: Apache-2.0
#include <foamrag/foamdict.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <optional>

namespace foamrag::dict
{

namespace
{

enum class TokenKind
{
    Word,
    Number,
    String,
    Variable,  // $name, ${name}
    Directive, // #include, #codeStream, ...
    Verbatim,  // #{ ... #}
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semicolon,
    End,
};

struct Token
{
    TokenKind kind = TokenKind::End;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t line = 1;
    std::size_t endLine = 1;
};

bool isOpener(TokenKind kind)
{
    return kind == TokenKind::LBrace || kind == TokenKind::LParen || kind == TokenKind::LBracket;
}

bool isCloser(TokenKind kind)
{
    return kind == TokenKind::RBrace || kind == TokenKind::RParen || kind == TokenKind::RBracket;
}

TokenKind closerFor(TokenKind opener)
{
    switch (opener)
    {
        case TokenKind::LBrace: return TokenKind::RBrace;
        case TokenKind::LParen: return TokenKind::RParen;
        default: return TokenKind::RBracket;
    }
}

bool isSpace(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool isWordBreak(char c)
{
    return isSpace(c) || c == '{' || c == '}' || c == '[' || c == ']' || c == ';' || c == '"';
}

bool isDigit(char c)
{
    return c >= '0' && c <= '9';
}

std::optional<Scalar> parseNumber(std::string_view text)
{
    if (text.empty())
        return std::nullopt;
    auto body = text;
    if (body.front() == '+')
        body.remove_prefix(1);
    if (body.empty())
        return std::nullopt;

    auto const isInteger = std::all_of(body.begin() + (body.front() == '-' ? 1 : 0), body.end(), isDigit)
                           && body != "-";
    if (isInteger)
    {
        std::int64_t value = 0;
        auto const [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
        if (ec == std::errc {} && ptr == body.data() + body.size())
            return Scalar { value };
    }

    double value = 0.0;
    auto const [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec == std::errc {} && ptr == body.data() + body.size())
        return Scalar { value };
    return std::nullopt;
}

class LineIndex
{
public:
    explicit LineIndex(std::string_view source)
    {
        _starts.push_back(0);
        for (std::size_t i = 0; i < source.size(); ++i)
            if (source[i] == '\n')
                _starts.push_back(i + 1);
    }

    [[nodiscard]] SourcePosition at(std::size_t offset) const
    {
        auto const it = std::upper_bound(_starts.begin(), _starts.end(), offset);
        auto const line = static_cast<std::size_t>(it - _starts.begin());
        return SourcePosition { offset, line, offset - _starts[line - 1] + 1 };
    }

private:
    std::vector<std::size_t> _starts;
};

class Lexer
{
public:
    Lexer(std::string_view source, LineIndex const& lines): _src(source), _lines(lines) {}

    std::vector<Token> run()
    {
        std::vector<Token> tokens;
        while (true)
        {
            skipTrivia();
            if (_i >= _src.size())
            {
                tokens.push_back(make(TokenKind::End, _i, _i));
                return tokens;
            }
            tokens.push_back(next());
        }
    }

private:
    [[nodiscard]] char peek(std::size_t ahead = 0) const
    {
        return _i + ahead < _src.size() ? _src[_i + ahead] : '\0';
    }

    [[noreturn]] void fail(Errc code, std::size_t offset, std::string const& what) const
    {
        throw ParseError(code, _lines.at(offset), what);
    }

    Token make(TokenKind kind, std::size_t begin, std::size_t end)
    {
        auto token = Token { kind, begin, end, _line, _line };
        for (auto k = begin; k < end; ++k)
            if (_src[k] == '\n')
                ++token.endLine;
        _line = token.endLine;
        return token;
    }

    void skipTrivia()
    {
        while (_i < _src.size())
        {
            auto const c = _src[_i];
            if (isSpace(c))
            {
                if (c == '\n')
                    ++_line;
                ++_i;
            }
            else if (c == '/' && peek(1) == '/')
            {
                while (_i < _src.size() && _src[_i] != '\n')
                    ++_i;
            }
            else if (c == '/' && peek(1) == '*')
            {
                auto const start = _i;
                auto const close = _src.find("*/", _i + 2);
                if (close == std::string_view::npos)
                    fail(Errc::UnbalancedDelimiters, start, "unterminated block comment");
                for (auto k = _i; k < close; ++k)
                    if (_src[k] == '\n')
                        ++_line;
                _i = close + 2;
            }
            else
            {
                return;
            }
        }
    }

    Token next()
    {
        auto const start = _i;
        auto const c = _src[_i];
        switch (c)
        {
            case '{': ++_i; return make(TokenKind::LBrace, start, _i);
            case '}': ++_i; return make(TokenKind::RBrace, start, _i);
            case '(': ++_i; return make(TokenKind::LParen, start, _i);
            case ')': ++_i; return make(TokenKind::RParen, start, _i);
            case '[': ++_i; return make(TokenKind::LBracket, start, _i);
            case ']': ++_i; return make(TokenKind::RBracket, start, _i);
            case ';': ++_i; return make(TokenKind::Semicolon, start, _i);
            case '"': return quoted();
            default: break;
        }

        if (c == '#' && peek(1) == '{')
        {
            auto const close = _src.find("#}", _i + 2);
            if (close == std::string_view::npos)
                fail(Errc::UnbalancedDelimiters, start, "unterminated #{ verbatim block");
            _i = close + 2;
            return make(TokenKind::Verbatim, start, _i);
        }
        if (c == '#')
        {
            ++_i;
            readWord(false);
            return make(TokenKind::Directive, start, _i);
        }
        if (c == '$')
        {
            ++_i;
            if (peek() == '{')
            {
                auto const close = _src.find('}', _i);
                if (close == std::string_view::npos)
                    fail(Errc::UnbalancedDelimiters, start, "unterminated ${ variable");
                _i = close + 1;
            }
            else
            {
                readWord(false);
            }
            return make(TokenKind::Variable, start, _i);
        }

        auto const numericStart = isDigit(c)
                                  || ((c == '-' || c == '+' || c == '.') && isDigit(peek(1)))
                                  || ((c == '-' || c == '+') && peek(1) == '.' && isDigit(peek(2)));
        readWord(numericStart);
        if (numericStart && parseNumber(_src.substr(start, _i - start)))
            return make(TokenKind::Number, start, _i);
        return make(TokenKind::Word, start, _i);
    }

    // Words may carry balanced parentheses, e.g. div(phi,U) or
    // div((nuEff*dev2(T(grad(U))))). Numbers stop at the first '(' so that
    // counted lists such as 4096(...) split into count and list.
    void readWord(bool numeric)
    {
        auto depth = 0;
        while (_i < _src.size())
        {
            auto const ch = _src[_i];
            if (isWordBreak(ch))
                break;
            if (ch == '/' && (peek(1) == '/' || peek(1) == '*'))
                break;
            if (ch == '(')
            {
                if (numeric)
                    break;
                ++depth;
            }
            else if (ch == ')')
            {
                if (depth == 0)
                    break;
                --depth;
            }
            ++_i;
        }
    }

    Token quoted()
    {
        auto const start = _i++;
        while (_i < _src.size())
        {
            if (_src[_i] == '\\' && _i + 1 < _src.size())
            {
                _i += 2;
                continue;
            }
            if (_src[_i] == '"')
            {
                ++_i;
                return make(TokenKind::String, start, _i);
            }
            ++_i;
        }
        fail(Errc::UnbalancedDelimiters, start, "unterminated string");
    }

    std::string_view _src;
    LineIndex const& _lines;
    std::size_t _i = 0;
    std::size_t _line = 1;
};

class Parser
{
public:
    Parser(std::string_view source): _src(source), _lines(source)
    {
        _tokens = Lexer(source, _lines).run();
    }

    ParseResult parseFile()
    {
        auto tree = parseEntries(nullptr);
        return ParseResult { std::move(tree), std::move(_warnings) };
    }

    ConfigNode parseLoneValue()
    {
        auto const end = _tokens.size() - 1; // drop End
        checkBalanced(0, end);
        return buildValue(0, end);
    }

private:
    [[nodiscard]] std::string_view text(Token const& t) const
    {
        return _src.substr(t.begin, t.end - t.begin);
    }

    [[noreturn]] void fail(Errc code, Token const& at, std::string const& what) const
    {
        throw ParseError(code, _lines.at(at.begin), what);
    }

    Dictionary parseEntries(Token const* open)
    {
        auto dict = Dictionary {};
        auto rawCount = std::size_t { 0 };
        while (true)
        {
            auto const& tok = _tokens[_pos];
            switch (tok.kind)
            {
                case TokenKind::End:
                    if (open)
                        fail(Errc::UnbalancedDelimiters, *open, "'{' is never closed");
                    return dict;
                case TokenKind::RBrace:
                    if (!open)
                        fail(Errc::UnbalancedDelimiters, tok, "unexpected '}'");
                    ++_pos;
                    return dict;
                case TokenKind::Semicolon:
                    ++_pos;
                    continue;
                case TokenKind::Directive:
                case TokenKind::Variable:
                {
                    auto raw = collectKeylessRaw();
                    insert(dict, fmt::format("{}{}", RawKeyPrefix, rawCount++), ConfigNode { std::move(raw) }, tok);
                    continue;
                }
                case TokenKind::Word:
                case TokenKind::String:
                case TokenKind::Number:
                    ++_pos;
                    parseEntryValue(dict, tok);
                    continue;
                case TokenKind::RParen:
                case TokenKind::RBracket:
                    fail(Errc::UnbalancedDelimiters, tok, fmt::format("unexpected '{}'", text(tok)));
                default:
                    fail(Errc::UnexpectedToken, tok, fmt::format("expected a keyword, found '{}'", text(tok)));
            }
        }
    }

    void insert(Dictionary& dict, std::string key, ConfigNode value, Token const& at)
    {
        if (dict.set(key, std::move(value)))
            _warnings.push_back(ParseWarning {
                _lines.at(at.begin), fmt::format("duplicate key '{}' replaces the earlier entry", key) });
    }

    // A directive runs to the end of its line; a bracketed group opened on
    // that line extends it. `$macro;` runs to its semicolon.
    Raw collectKeylessRaw()
    {
        auto const first = _pos;
        auto const isMacro = _tokens[first].kind == TokenKind::Variable;
        auto depth = 0;
        auto last = first;
        ++_pos;
        while (true)
        {
            auto const& tok = _tokens[_pos];
            if (tok.kind == TokenKind::End)
            {
                if (depth > 0)
                    fail(Errc::UnbalancedDelimiters, _tokens[first], "unterminated directive block");
                if (isMacro)
                    fail(Errc::MissingSemicolon, _tokens[first], "macro entry without ';'");
                break;
            }
            if (depth == 0)
            {
                if (tok.kind == TokenKind::RBrace)
                {
                    if (isMacro)
                        fail(Errc::MissingSemicolon, _tokens[first], "macro entry without ';'");
                    break;
                }
                if (!isMacro && tok.line != _tokens[last].endLine)
                    break;
            }
            if (isOpener(tok.kind))
                ++depth;
            else if (isCloser(tok.kind))
                --depth;
            last = _pos++;
            if (depth == 0 && tok.kind == TokenKind::Semicolon)
                break;
        }
        return Raw { reconstruct(first, last + 1) };
    }

    void parseEntryValue(Dictionary& dict, Token const& keyToken)
    {
        auto key = std::string(text(keyToken));
        auto const& next = _tokens[_pos];
        if (next.kind == TokenKind::LBrace)
        {
            ++_pos;
            auto sub = parseEntries(&next);
            if (_tokens[_pos].kind == TokenKind::Semicolon)
                ++_pos;
            insert(dict, std::move(key), ConfigNode { std::move(sub) }, keyToken);
            return;
        }

        auto const begin = _pos;
        std::vector<std::size_t> stack;
        while (true)
        {
            auto const& tok = _tokens[_pos];
            if (tok.kind == TokenKind::End)
            {
                if (!stack.empty())
                    fail(Errc::UnbalancedDelimiters, _tokens[stack.back()], "group is never closed");
                fail(Errc::MissingSemicolon, keyToken, fmt::format("entry '{}' has no terminating ';'", key));
            }
            if (stack.empty() && tok.kind == TokenKind::Semicolon)
                break;
            if (stack.empty() && tok.kind == TokenKind::RBrace)
                fail(Errc::MissingSemicolon, keyToken, fmt::format("entry '{}' has no terminating ';'", key));
            if (isOpener(tok.kind))
            {
                stack.push_back(_pos);
            }
            else if (isCloser(tok.kind))
            {
                if (stack.empty() || closerFor(_tokens[stack.back()].kind) != tok.kind)
                    fail(Errc::UnbalancedDelimiters, tok, fmt::format("mismatched '{}'", text(tok)));
                stack.pop_back();
            }
            ++_pos;
        }
        auto const end = _pos;
        ++_pos; // ';'
        auto const resume = _pos;
        auto value = buildValue(begin, end);
        _pos = resume;
        insert(dict, std::move(key), std::move(value), keyToken);
    }

    void checkBalanced(std::size_t begin, std::size_t end) const
    {
        std::vector<std::size_t> stack;
        for (auto i = begin; i < end; ++i)
        {
            auto const kind = _tokens[i].kind;
            if (isOpener(kind))
                stack.push_back(i);
            else if (isCloser(kind))
            {
                if (stack.empty() || closerFor(_tokens[stack.back()].kind) != kind)
                    fail(Errc::UnbalancedDelimiters, _tokens[i], "mismatched closing delimiter");
                stack.pop_back();
            }
            else if (kind == TokenKind::Semicolon && stack.empty())
                fail(Errc::UnexpectedToken, _tokens[i], "unexpected ';' in value");
        }
        if (!stack.empty())
            fail(Errc::UnbalancedDelimiters, _tokens[stack.back()], "group is never closed");
    }

    [[nodiscard]] std::size_t matching(std::size_t open) const
    {
        auto depth = 0;
        for (auto i = open; i < _tokens.size(); ++i)
        {
            if (isOpener(_tokens[i].kind))
                ++depth;
            else if (isCloser(_tokens[i].kind) && --depth == 0)
                return i;
        }
        return _tokens.size() - 1;
    }

    [[nodiscard]] ConfigNode scalarToken(Token const& tok) const
    {
        auto const t = text(tok);
        switch (tok.kind)
        {
            case TokenKind::Number: return ConfigNode { *parseNumber(t) };
            case TokenKind::String: return ConfigNode { Scalar { QuotedString { std::string(t.substr(1, t.size() - 2)) } } };
            case TokenKind::Word:
                if (t == "true")
                    return ConfigNode { Scalar { true } };
                if (t == "false")
                    return ConfigNode { Scalar { false } };
                return ConfigNode { Scalar { Word { std::string(t) } } };
            default: return ConfigNode { Raw { std::string(t) } };
        }
    }

    [[nodiscard]] std::optional<DimensionVector> dimensions(std::size_t begin, std::size_t end) const
    {
        if (end - begin != 9 || _tokens[begin].kind != TokenKind::LBracket
            || _tokens[end - 1].kind != TokenKind::RBracket)
            return std::nullopt;
        auto dims = DimensionVector {};
        for (std::size_t k = 0; k < 7; ++k)
        {
            auto const& tok = _tokens[begin + 1 + k];
            if (tok.kind != TokenKind::Number)
                return std::nullopt;
            auto const number = parseNumber(text(tok));
            if (!number || !std::holds_alternative<std::int64_t>(*number))
                return std::nullopt;
            dims.exponents[k] = static_cast<int>(std::get<std::int64_t>(*number));
        }
        return dims;
    }

    ConfigNode buildValue(std::size_t begin, std::size_t end)
    {
        if (begin == end)
            return ConfigNode { Scalar { TokenRun {} } };

        for (auto i = begin; i < end; ++i)
        {
            auto const kind = _tokens[i].kind;
            if (kind == TokenKind::Variable || kind == TokenKind::Directive || kind == TokenKind::Verbatim)
                return ConfigNode { Raw { reconstruct(begin, end) } };
        }

        if (end - begin == 1)
            return scalarToken(_tokens[begin]);

        if (_tokens[begin].kind == TokenKind::LParen && matching(begin) == end - 1)
            return ConfigNode { buildList(begin + 1, end - 1) };

        if (auto dims = dimensions(begin, end))
            return ConfigNode { Scalar { *dims } };

        return ConfigNode { Scalar { TokenRun { normalize(begin, end) } } };
    }

    List buildList(std::size_t begin, std::size_t end)
    {
        auto list = List {};
        auto i = begin;
        while (i < end)
        {
            auto const& tok = _tokens[i];
            switch (tok.kind)
            {
                case TokenKind::LParen:
                {
                    auto const close = matching(i);
                    list.items.emplace_back(buildList(i + 1, close));
                    i = close + 1;
                    break;
                }
                case TokenKind::LBracket:
                {
                    auto const close = matching(i);
                    if (auto dims = dimensions(i, close + 1))
                        list.items.emplace_back(Scalar { *dims });
                    else
                        list.items.emplace_back(Scalar { TokenRun { normalize(i, close + 1) } });
                    i = close + 1;
                    break;
                }
                case TokenKind::LBrace:
                {
                    auto const saved = _pos;
                    _pos = i + 1;
                    auto sub = parseEntries(&tok);
                    i = _pos;
                    _pos = saved;
                    list.items.emplace_back(std::move(sub));
                    break;
                }
                case TokenKind::Semicolon:
                    fail(Errc::UnexpectedToken, tok, "unexpected ';' inside list");
                default:
                    list.items.push_back(scalarToken(tok));
                    ++i;
                    break;
            }
        }
        return list;
    }

    [[nodiscard]] std::string normalize(std::size_t begin, std::size_t end) const
    {
        std::string out;
        for (auto i = begin; i < end; ++i)
        {
            auto const kind = _tokens[i].kind;
            if (i > begin)
            {
                auto const prev = _tokens[i - 1].kind;
                auto const glue = prev == TokenKind::LParen || prev == TokenKind::LBracket
                                  || kind == TokenKind::RParen || kind == TokenKind::RBracket;
                if (!glue)
                    out += ' ';
            }
            out += text(_tokens[i]);
        }
        return out;
    }

    // Verbatim source text of a token range with any comment-bearing gap
    // collapsed to a single separator.
    [[nodiscard]] std::string reconstruct(std::size_t begin, std::size_t end) const
    {
        std::string out;
        for (auto i = begin; i < end; ++i)
        {
            if (i > begin)
            {
                auto const gap = _src.substr(_tokens[i - 1].end, _tokens[i].begin - _tokens[i - 1].end);
                if (gap.find('/') == std::string_view::npos)
                    out += gap;
                else
                    out += gap.find('\n') == std::string_view::npos ? " " : "\n";
            }
            out += text(_tokens[i]);
        }
        return out;
    }

    std::string_view _src;
    LineIndex _lines;
    std::vector<Token> _tokens;
    std::size_t _pos = 0;
    std::vector<ParseWarning> _warnings;
};

std::string_view stripBom(std::string_view text)
{
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF
        && static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
        text.remove_prefix(3);
    return text;
}

void requireUtf8(std::string_view text)
{
    if (!is_valid_utf8(text))
        throw ParseError(Errc::InvalidEncoding, SourcePosition {}, "input is not valid UTF-8");
}

} // namespace

bool is_valid_utf8(std::string_view text)
{
    std::size_t i = 0;
    while (i < text.size())
    {
        auto const c = static_cast<unsigned char>(text[i]);
        std::size_t extra = 0;
        if (c < 0x80)
            extra = 0;
        else if ((c & 0xE0) == 0xC0 && c >= 0xC2)
            extra = 1;
        else if ((c & 0xF0) == 0xE0)
            extra = 2;
        else if ((c & 0xF8) == 0xF0 && c <= 0xF4)
            extra = 3;
        else
            return false;
        if (extra > 0 && i + extra >= text.size())
            return false;
        for (std::size_t k = 1; k <= extra; ++k)
            if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80)
                return false;
        i += extra + 1;
    }
    return true;
}

ParseResult parse_dictionary(std::string_view text)
{
    requireUtf8(text);
    return Parser(stripBom(text)).parseFile();
}

ConfigNode parse_value(std::string_view text)
{
    requireUtf8(text);
    return Parser(text).parseLoneValue();
}

} // namespace foamrag::dict

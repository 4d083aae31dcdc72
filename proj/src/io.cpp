// SPDX-License-Identifier: Apache-2.0
#include <foamrag/error.hpp>
#include <foamrag/io.hpp>

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace foamrag
{

std::string read_text(std::filesystem::path const& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error(Errc::Io, fmt::format("cannot open '{}'", path.string()));
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(std::filesystem::path const& path, std::string_view content)
{
    auto ec = std::error_code {};
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, fmt::format("cannot write '{}'", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw Error(Errc::Io, fmt::format("short write to '{}'", path.string()));
}

std::string relative_slash_path(std::filesystem::path const& path, std::filesystem::path const& base)
{
    return path.lexically_relative(base).generic_string();
}

} // namespace foamrag

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace foamrag
{

/// Whole file as bytes. Throws Error(Io).
std::string read_text(std::filesystem::path const& path);

/// Writes bytes, creating parent directories. Throws Error(Io).
void write_text(std::filesystem::path const& path, std::string_view content);

/// Path relative to `base` with '/' separators.
std::string relative_slash_path(std::filesystem::path const& path, std::filesystem::path const& base);

} // namespace foamrag

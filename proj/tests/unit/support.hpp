// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <foamrag/kb.hpp>

#include <filesystem>
#include <unistd.h>
#include <string>

namespace foamrag::test
{

inline std::filesystem::path data_dir()
{
    return std::filesystem::path(FOAMRAG_TEST_DATA);
}

inline std::filesystem::path fixtures()
{
    return data_dir() / "fixtures";
}

/// Mini tutorial corpus with the bundled guidance; built once per process.
inline kb::KnowledgeBase const& mini_kb()
{
    static auto const result =
        kb::build_kb(fixtures() / "tutorials", kb::load_guidance_documents(fixtures() / "guidance"));
    return result.kb;
}

inline kb::KnowledgeBase const& keyword_kb()
{
    static auto const result = kb::build_kb(fixtures() / "keyword_tutorials", {});
    return result.kb;
}

/// Fresh empty directory under the system temp dir, private to this process.
inline std::filesystem::path scratch_dir(std::string const& name)
{
    auto const dir = std::filesystem::temp_directory_path() / ("foamrag_test_" + std::to_string(::getpid())) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace foamrag::test

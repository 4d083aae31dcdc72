// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <foamrag/error.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace foamrag::cli
{

enum ExitCode : int
{
    Ok = 0,
    Environment = 1,
    Input = 2,
    CaseFailed = 3,
};

/// Exit code for a library error.
int exit_code_for(Errc code);

/// Runs one command line (without the program name). Never throws.
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

} // namespace foamrag::cli

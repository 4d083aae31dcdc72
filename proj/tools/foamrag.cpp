// SPDX-License-Identifier: Apache-2.0
#include <foamrag/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    auto args = std::vector<std::string>(argv + 1, argv + argc);
    return foamrag::cli::run_cli(args, std::cout, std::cerr);
}

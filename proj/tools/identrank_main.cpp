#include <iostream>
#include <string>
#include <vector>

#include "identrank/cli.hpp"

int main(int argc, char **argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return identrank::cli::run(args, std::cout, std::cerr);
}

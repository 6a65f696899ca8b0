#include <iostream>
#include <string>
#include <vector>

#include "qrouter/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qrouter::run_cli(args, std::cin, std::cout, std::cerr);
}

#include <iostream>
#include <string>
#include <vector>

#include "dside/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return dside::run_cli(args, std::cout, std::cerr);
}

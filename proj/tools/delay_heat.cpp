#include <iostream>
#include <string>
#include <vector>

#include "delay_heat/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return delay_heat::cli::run(args, std::cout, std::cerr);
}

#include <iostream>

#include "clearing/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return clearing::dispatch(args, std::cout, std::cerr);
}

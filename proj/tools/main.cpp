#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    mgcn::cli::configure_threads();
    std::vector<std::string> args(argv + 1, argv + argc);
    return mgcn::cli::run(args, std::cout, std::cerr);
}

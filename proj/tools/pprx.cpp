#include <iostream>

#include "pprx/cli.hpp"

int main(int argc, char** argv) { return pprx::cli::run(argc, argv, std::cout, std::cerr, std::cin); }

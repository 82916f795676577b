#include <iostream>

#include "viralfb/cli.hpp"

int main(int argc, char** argv) { return viralfb::cli::run(argc, argv, std::cout, std::cerr); }

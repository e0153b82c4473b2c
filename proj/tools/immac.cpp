#include <iostream>

#include "immac/cli.hpp"

int main(int argc, char** argv) { return immac::cli::main(argc, argv, std::cout, std::cerr); }

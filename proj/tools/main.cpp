#include <iostream>

#include "profwall/cli.hpp"

int main(int argc, char** argv) { return profwall::run_cli(argc, argv, std::cout, std::cerr); }

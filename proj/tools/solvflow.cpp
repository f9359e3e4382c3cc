#include "solvflow/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return solvflow::run_cli(argc, argv, std::cout, std::cerr); }

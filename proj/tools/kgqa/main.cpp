#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return kgqa::cli::run_cli(argc, argv, std::cin, std::cout, std::cerr); }

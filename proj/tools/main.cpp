#include <iostream>

#include "pmca_cli/commands.hpp"

int main(int argc, char** argv) { return pmca::cli::main_entry(argc, argv, std::cout, std::cerr); }

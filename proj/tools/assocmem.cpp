#include "assocmem/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return assocmem::run_cli(argc, argv, std::cout, std::cerr); }

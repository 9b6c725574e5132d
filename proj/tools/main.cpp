#include <iostream>

#include "rsim/cli.hpp"

int main(int argc, char** argv) { return rsim::run_cli(argc, argv, std::cout, std::cerr); }

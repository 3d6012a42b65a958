#include <iostream>

#include "uwb/cli.hpp"

int main(int argc, char** argv) { return uwb::cli::run(argc, argv, std::cout, std::cerr); }

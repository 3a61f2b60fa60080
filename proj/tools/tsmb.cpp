#include <iostream>

#include "tsmb/cli.hpp"

int main(int argc, char** argv) { return tsmb::cli::run(argc, argv, std::cout, std::cerr); }

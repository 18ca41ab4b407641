#include <iostream>

#include "oliva/cli.hpp"

int main(int argc, char** argv) { return oliva::cli::run(argc, argv, std::cout, std::cerr); }

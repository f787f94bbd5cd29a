#include <iostream>

#include "fracsing/cli.hpp"

int main(int argc, char** argv) { return fracsing::run_cli(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "elmech/cli.hpp"

int main(int argc, char** argv) { return elmech::run_cli(argc, argv, std::cout, std::cerr); }

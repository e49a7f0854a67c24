#include <iostream>

#include "metarep/cli.hpp"

int main(int argc, char** argv) { return metarep::run_cli(argc, argv, std::cout, std::cerr); }

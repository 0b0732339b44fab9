#include "bbsense/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bbsense::run_cli(argc, argv, std::cout, std::cerr); }

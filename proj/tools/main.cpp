#include "tdpauc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tdpauc::run_cli(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "nameprobe/cli.hpp"

int main(int argc, char** argv) { return nameprobe::run_cli(argc, argv, std::cout, std::cerr); }

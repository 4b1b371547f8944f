#include <iostream>

#include "holo_rmt/cli.hpp"

int main(int argc, char** argv) { return holo_rmt::run_cli(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "mhpp/cli.hpp"

int main(int argc, char** argv) { return mhpp::run_cli(argc, argv, std::cout, std::cerr); }

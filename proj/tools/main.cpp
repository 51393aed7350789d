#include <iostream>

#include "tcenter/cli.hpp"

int main(int argc, char** argv) { return tcenter::run_cli(argc, argv, std::cout, std::cerr); }

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return dl4::cli::run(argc, argv, std::cout, std::cerr); }

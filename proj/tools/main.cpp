#include <iostream>

#include "filterlens/cli.hpp"

int main(int argc, char** argv) { return filterlens::cli::run(argc, argv, std::cout, std::cerr); }

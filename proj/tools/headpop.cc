#include <iostream>

#include "headpop/cli.h"

int main(int argc, char** argv) { return headpop::cli::run(argc, argv, std::cout, std::cerr); }

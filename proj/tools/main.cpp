#include <iostream>

#include "iadfp/cli.hpp"

int main(int argc, char** argv) { return iadfp::cli::run(argc, argv, std::cout, std::cerr); }

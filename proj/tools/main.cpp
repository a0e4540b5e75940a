#include <iostream>

#include "dtdss/cli.hpp"

int main(int argc, char** argv) { return dtdss::cli::run(argc, argv, std::cout, std::cerr); }

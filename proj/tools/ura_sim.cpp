#include <iostream>

#include "ura/cli.hpp"

int main(int argc, char** argv) { return ura::parse_and_dispatch(argc, argv, std::cout, std::cerr); }

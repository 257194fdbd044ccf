#include <iostream>

#include <fracsteklov/cli.hpp>

int main(int argc, char** argv) { return fracsteklov::cli_dispatch(argc, argv, std::cout, std::cerr); }

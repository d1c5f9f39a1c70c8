#include <iostream>

#include "t3vae/cli/commands.hpp"

int main(int argc, char** argv) { return t3vae::cli::run_cli(argc, argv, std::cout, std::cerr); }

#include "cli/cli.hpp"

int main(int argc, char** argv) { return wmorph::cli::run(argc, argv); }

#include "foldsolve/cli.hpp"

int main(int argc, char **argv) { return foldsolve::cli::run(argc, argv); }

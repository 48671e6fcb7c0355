#include "rlweno/cli.hpp"

int main(int argc, char** argv) { return rlweno::run_subcommand(argc, argv); }

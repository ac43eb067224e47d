#include "cli/commands.hpp"

int main(int argc, char** argv) { return duplex::cli::run_cli(argc, argv); }

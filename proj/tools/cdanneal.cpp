#include "cdanneal/cli.hpp"

int main(int argc, char** argv) { return cdanneal::cli::run_command(argc, argv); }

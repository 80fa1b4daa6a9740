#include "geoclade/cli.hpp"

int main(int argc, char** argv) { return geoclade::run_cli(argc, argv); }

#include "spinn/cli.hpp"

int main(int argc, char** argv) { return spinn::cli_main(argc, argv); }

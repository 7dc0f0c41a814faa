#include "holoarm/cli.hpp"

int main(int argc, char** argv) { return holoarm::cli_run(argc, argv); }

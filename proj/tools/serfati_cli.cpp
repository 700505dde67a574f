#include "serfati/cli.hpp"

int main(int argc, char** argv) { return serfati::cli_main(argc, argv); }

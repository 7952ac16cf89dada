#include "apperf/cli.hpp"

int main(int argc, char** argv) { return apperf::cli_main(argc, argv); }

#include "engagemax/cli_runner.hpp"

int main(int argc, char** argv) { return engagemax::run_cli(argc, argv); }

#include "mohpi/cli.hpp"

int main(int argc, char** argv) { return mohpi::run_cli(argc, argv); }

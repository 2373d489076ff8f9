#include "spk/cli.hpp"

int main(int argc, char** argv) { return spk::run_cli(argc, argv); }

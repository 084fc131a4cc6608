#include "fgln/cli.hpp"

int main(int argc, char** argv) { return fgln::run_cli(argc, argv); }

#include "fk/cli.hpp"

int main(int argc, char** argv) { return fk::run_cli(argc, argv); }

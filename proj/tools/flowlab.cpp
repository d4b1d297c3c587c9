#include "flowlab/cli.hpp"

int main(int argc, char** argv) { return flowlab::run_cli(argc, argv); }

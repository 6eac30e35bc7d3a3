#include "prooflens/cli.hpp"

int main(int argc, char** argv) { return prooflens::run_cli(argc, argv); }

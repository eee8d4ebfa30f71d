#include "arotnep/cli.hpp"

int main(int argc, char** argv) { return arotnep::run_cli(argc, argv); }

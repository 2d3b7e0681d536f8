#include "cmms/cli.hpp"

int main(int argc, char** argv) { return cmms::run_cli(argc, argv); }

#include "hflow/cli.hpp"

int main(int argc, char** argv) { return hflow::cli_main(argc, argv); }

#include "layoutgen/cli.hpp"

int main(int argc, char** argv) { return layoutgen::run_cli(argc, argv); }

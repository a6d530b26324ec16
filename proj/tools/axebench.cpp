#include "axebench/cli.hpp"

int main(int argc, char** argv) { return axebench::cli_main(argc, argv); }

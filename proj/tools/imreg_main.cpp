#include "imreg/cli.hpp"

int main(int argc, char** argv) { return imreg::run_cli(argc, argv); }

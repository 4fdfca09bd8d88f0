#include "hyperinv/cli.hpp"

int main(int argc, char** argv) { return hyperinv::cli::main_entry(argc, argv); }

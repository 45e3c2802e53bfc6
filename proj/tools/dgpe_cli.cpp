#include "cli/run.hpp"

int main(int argc, char** argv) { return dgpe::cli::main_entry(argc, argv); }

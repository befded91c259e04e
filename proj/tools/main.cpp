#include "commands.hpp"

int main(int argc, char** argv) { return spinsc::cli::run_cli(argc, argv); }

#include "glasseg/cli/commands.hpp"

int main(int argc, char** argv) { return glasseg::cli::run(argc, argv); }

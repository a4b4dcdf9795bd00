#include "shiftsel/cli.hpp"

int main(int argc, char** argv) { return shiftsel::cli::run(argc, argv); }

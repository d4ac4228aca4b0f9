#include "copson/cli.hpp"

int main(int argc, char** argv) { return copson::cli::run(argc, argv); }

#include "spatialqa/cli/cli.hpp"

int main(int argc, char** argv) { return spatialqa::cli::run(argc, argv); }

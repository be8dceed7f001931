#include "recast/cli/app.hpp"

int main(int argc, char** argv) { return recast::cli::main(argc, argv); }

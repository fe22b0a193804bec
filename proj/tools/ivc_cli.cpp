#include "ivc/cli/cli.hpp"

int main(int argc, char** argv) { return ivc::cli::run(argc, argv); }

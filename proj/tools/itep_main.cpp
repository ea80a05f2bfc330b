#include "itep/cli.hpp"

int main(int argc, char** argv) { return itep::cli::run(argc, argv); }

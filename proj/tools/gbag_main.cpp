#include "gbag/cli.hpp"

int main(int argc, char** argv) { return gbag::cli::run(argc, argv); }

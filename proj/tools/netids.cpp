#include "netids/cli.hpp"

int main(int argc, char** argv) { return netids::cli::run(argc, argv); }

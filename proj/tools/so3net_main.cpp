#include "so3net/cli.hpp"

int main(int argc, char** argv) { return so3net::cli::run_main(argc, argv); }

#include "cli.hpp"

int main(int argc, char** argv) { return flowguard::cli::run(argc, argv); }

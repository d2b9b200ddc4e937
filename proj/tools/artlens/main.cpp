#include "cli.hpp"

int main(int argc, char** argv) { return artlens::cli::run(argc, argv); }

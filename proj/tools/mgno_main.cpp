#include "mgno/expcli/commands.hpp"

int main(int argc, char** argv) { return mgno::cli::run(argc, argv); }

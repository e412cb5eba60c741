#include "seldyn/commands.hpp"

int main(int argc, char** argv) { return seldyn::run_cli(argc, argv); }

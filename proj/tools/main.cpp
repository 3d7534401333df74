#include "topoloc/cli.hpp"

int main(int argc, char** argv) { return topoloc::run_command(argc, argv); }

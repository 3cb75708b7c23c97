#include "ddnav/cli.hpp"

int main(int argc, char** argv) { return ddnav::cli::dispatch(argc, argv); }

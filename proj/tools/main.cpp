#include "mwsub/cli.hpp"

int main(int argc, char** argv) { return mwsub::run_cli(argc, argv); }

#include "tvlab/harness.hpp"

int main(int argc, char** argv) { return tvlab::cli_main(argc, argv); }

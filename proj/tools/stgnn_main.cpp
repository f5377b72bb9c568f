#include "stgnn/cli.hpp"

int main(int argc, char** argv) { return stgnn::cli_main(argc, argv); }

#include "issuelab/cli.hpp"

int main(int argc, char** argv) { return issuelab::cli::run(argc, argv); }

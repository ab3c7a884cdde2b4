#include "imcond/cli.hpp"

int main(int argc, char** argv) { return imcond::cli::run(argc, argv); }

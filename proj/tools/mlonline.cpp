#include "mlonline/cli.hpp"

int main(int argc, char** argv) { return mlonline::cli::main(argc, argv); }

#include "metalert/cli.hpp"

int main(int argc, char** argv) { return metalert::cli::run(argc, argv); }

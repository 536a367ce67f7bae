#include "cli.hpp"

int main(int argc, char** argv) { return vdblur::cli::run(argc, argv); }

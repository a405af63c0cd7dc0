#include "commands.hpp"

int main(int argc, char** argv) { return cgc::cli::run_main(argc, argv); }

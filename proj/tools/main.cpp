#include "commands.hpp"

int main(int argc, char** argv) { return dagreg::cli::run(argc, argv); }

#include "commands.hpp"

int main(int argc, char** argv) { return fairsvt::cli::run(argc, argv); }

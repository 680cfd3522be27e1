#include <rbmts/cli.hpp>

int main(int argc, char** argv) { return rbmts::cli::run(argc, argv); }

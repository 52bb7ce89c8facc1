#include <nysadmm/cli.hpp>

int main(int argc, char** argv) { return nysadmm::cli_main(argc, argv); }

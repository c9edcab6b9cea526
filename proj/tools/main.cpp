#include "nss/cli.hpp"

int main(int argc, char** argv) { return nss::cli::run(argc, argv); }

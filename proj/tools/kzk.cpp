// kzk: Krylov complexity of the Kibble-Zurek quench in the transverse-field
// Ising chain.

#include "cli.hpp"

int main(int argc, char** argv) { return kzk::cli::run(argc, argv); }

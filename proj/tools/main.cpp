#include "dmpfem/cli.hpp"

int main(int argc, char** argv) { return dmpfem::cli_main(argc, argv); }

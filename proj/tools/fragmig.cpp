#include "fragmig/cli.hpp"

int main(int argc, char** argv) { return fragmig::cli::dispatch(argc, argv); }

#include "pfspin/driver.hpp"

int main(int argc, char** argv) { return pfspin::cli_main(argc, argv); }

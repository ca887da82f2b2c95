#include "mdta2g/cli.hpp"

int main(int argc, char** argv) { return mdta2g::run(argc, argv); }

#include <iostream>

#include "sct/harness/cli.hpp"

int main(int argc, char** argv) {
    return sct::harness::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}

#include <iostream>

#include "vidsearch/cli.hpp"

int main(int argc, char** argv) {
    return vidsearch::cli::run(argc, argv, std::cout, std::cerr);
}

#include <exception>
#include <iostream>

#include "episcale/cli.hpp"

int main(int argc, char** argv) {
    try {
        return episcale::cli::run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "episcale: fatal: " << e.what() << "\n";
        return 1;
    }
}

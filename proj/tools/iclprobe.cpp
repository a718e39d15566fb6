#include "iclprobe/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return iclprobe::cli::dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}

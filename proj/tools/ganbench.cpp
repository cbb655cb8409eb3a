#include <string>
#include <vector>

#include "ganbench/bench_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ganbench::cli::run_cli(args);
}

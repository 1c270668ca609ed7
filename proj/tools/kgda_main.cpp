#include "kgda/bench/cli.hpp"

int main(int argc, char** argv) {
    return kgda::bench::run_cli({argv + 1, argv + argc});
}

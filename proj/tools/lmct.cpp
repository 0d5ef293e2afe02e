#include <string>
#include <vector>

#include "lmc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) {
        std::cout << lmc::cli::kUsage;
        return 1;
    }
    return lmc::cli::run(args);
}

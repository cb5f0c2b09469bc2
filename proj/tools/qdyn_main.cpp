#include <string>
#include <vector>

#include "qdyn/cli.hpp"

int main(int argc, char** argv) {
    return qdyn::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

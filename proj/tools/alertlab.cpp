#include "alertlab/cli.hpp"

int main(int argc, char** argv) {
    return alertlab::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

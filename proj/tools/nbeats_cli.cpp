#include <string>
#include <vector>

#include "nbeats/commands.hpp"

int main(int argc, char** argv) {
    return nbeats::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

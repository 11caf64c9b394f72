#include <csignal>
#include <string>
#include <vector>

#include "dre/commands.hpp"
#include "dre/util.hpp"

namespace {

void handle_interrupt(int) { dre::util::request_interrupt(); }

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_interrupt);
    std::signal(SIGTERM, handle_interrupt);
    std::vector<std::string> args(argv + 1, argv + argc);
    return dre::cli::run_cli(args);
}

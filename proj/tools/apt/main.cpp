#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("apt"));
    spdlog::set_pattern("%^%l%$: %v");
    std::vector<std::string> args(argv + 1, argv + argc);
    return apt::cli::run(args, std::cout, std::cerr);
}

#define DOCTEST_CONFIG_IMPLEMENT
#include "torch_doctest.hpp"

#include <spdlog/spdlog.h>

int main(int argc, char** argv) {
    torch::set_num_threads(1);
    spdlog::set_level(spdlog::level::err);
    doctest::Context context(argc, argv);
    return context.run();
}

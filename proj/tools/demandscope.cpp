#include <cstdio>

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"demandscope: consumption-tier prediction from overhead imagery"};
    app.require_subcommand(0, 1);
    CLI11_PARSE(app, argc, argv);
    if (app.get_subcommands().empty()) {
        std::puts(app.help().c_str());
        return 2;
    }
    return 0;
}

#include <CLI11.hpp>
#include <cstdint>
#include <optional>
#include <string>

#include "hpde/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet laboratory for symmetric-function Hessian equations on flat "
                 "Hermitian products"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    const std::vector<std::string> names = {"verify-cones",     "verify-arrow", "subsolution",
                                            "solve",            "solve-degenerate",
                                            "probe-estimates",  "compare"};
    std::string chosen;
    for (const std::string& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("config", config_path, "config file")->required();
        sub->add_option("--seed", seed_value, "override [run] seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->callback([&, name]() { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);
    if (seed_set) seed = seed_value;
    return hpde::runner::run(chosen, config_path, seed);
}

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "nodal/cli.hpp"
#include "nodal/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Positive, nodal and mountain-pass solutions of -Lap u = f(u)"};
    app.set_help_flag("--help", "print this help and exit");
    std::string scenario;
    std::string config_path;
    std::string out_dir;
    std::string h;
    std::string lambda;
    app.add_option("scenario", scenario,
                   "eig | positive | nodal | morse | mp | bifurcate | square-validate | disk-symmetry | dumbbell-gap")
        ->required();
    app.add_option("--config", config_path, "key = value or JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--h", h, "grid spacing, e.g. pi/64");
    app.add_option("--lambda", lambda, "Allen-Cahn lambda");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }
    try {
        const auto sc = nodal::cli::parse_scenario(scenario);
        nodal::cli::Config cfg = config_path.empty() ? nodal::cli::Config{} : nodal::cli::Config::load(config_path);
        if (!h.empty()) cfg.set("h", h);
        if (!lambda.empty()) cfg.set("nonlinearity.lambda", lambda);
        std::filesystem::path out = out_dir.empty() ? cfg.get_string("output", "nodal_out") : out_dir;
        return nodal::cli::run(sc, cfg, out, std::cout);
    } catch (const nodal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    }
}

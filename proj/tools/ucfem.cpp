#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <ucfem/cli.hpp>
#include <ucfem/config.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Stabilized finite elements for unique continuation of harmonic functions"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = ".";
    bool strict = false;
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--set", sets, "override key=value (repeatable)")->take_all();
    app.add_option("--out-dir", out_dir, "directory for reports and mesh files");
    app.add_flag("--strict", strict, "exit 4 when a study check fails");

    const std::map<std::string, std::string> help{
        {"alpha", "optimal three-ball exponent"},
        {"three-ball", "three-ball ratios of harmonic monomials"},
        {"mesh", "build, validate and write a disk mesh"},
        {"poisson", "Poisson baseline at one level"},
        {"uc", "one unique continuation solve"},
        {"converge", "unperturbed convergence study"},
        {"perturb", "data perturbation study"},
        {"stagnate", "h_min stagnation study"},
        {"selftest", "algebraic invariants"}};
    for (const auto& name : ucfem::cli::subcommands()) app.add_subcommand(name, help.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : ucfem::cli::kConfig;
    }

    ucfem::RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ucfem::ConfigError("cannot read config file " + config_path);
            std::stringstream ss;
            ss << f.rdbuf();
            cfg = ucfem::parse_config(ss.str());
        }
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ucfem::ConfigError("--set expects key=value, got '" + s + "'");
            kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        cfg = ucfem::apply_overrides(cfg, kv);
    } catch (const ucfem::ConfigError& e) {
        std::cerr << "error[config]: " << e.what() << '\n';
        return ucfem::cli::kConfig;
    }

    ucfem::cli::Options opt;
    opt.out_dir = out_dir;
    opt.strict = strict;
    return ucfem::cli::dispatch(app.get_subcommands().front()->get_name(), cfg, opt, std::cout, std::cerr);
}

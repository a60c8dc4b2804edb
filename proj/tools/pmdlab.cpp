#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmdlab/experiments.hpp"
#include "pmdlab/grid.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pmdlab: porous medium drift experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pmd::version());

    int jobs = 0;
    std::string out;
    std::vector<std::string> overrides;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", out, "output directory (overrides out_dir)");
        sub->add_option("--override", overrides, "key=value, repeatable")->take_all();
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* list = app.add_subcommand("list", "list the experiments");

    std::string id;
    auto* exp = app.add_subcommand("experiment", "run an experiment with its default config");
    exp->add_option("id", id, "experiment id")->required();
    common(exp);

    std::string config;
    auto* run = app.add_subcommand("run", "run a config file");
    run->add_option("--config", config, "key=value config file")->required()->check(CLI::ExistingFile);
    common(run);

    std::string stored;
    auto* rep = app.add_subcommand("replay", "rerun a stored config.txt");
    rep->add_option("config,--config", stored, "stored config")->required()->check(CLI::ExistingFile);
    common(rep);

    CLI11_PARSE(app, argc, argv);

    try {
        if (jobs > 0) pmd::set_jobs(jobs);
        if (!out.empty()) overrides.push_back("out_dir=" + out);
        if (list->parsed()) {
            std::cout << pmd::list_experiments();
            return 0;
        }
        pmd::Report r;
        if (exp->parsed()) {
            r = pmd::run_experiment(id, overrides);
        } else if (run->parsed()) {
            auto c = pmd::RunConfig::load(config);
            for (const auto& o : overrides) c.apply(o);
            r = pmd::run_config(c);
        } else {
            r = pmd::replay(stored, overrides, std::cerr);
        }
        std::cout << r.text() << "runtime " << r.seconds << " s\n";
        return r.passed() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "diffcore/errors.hpp"

namespace {

// --config plus the common override flags shared by search and eval.
struct CommonOpts {
    std::string config_path;
    std::string level;
    std::string out;
    std::string run_name;
    std::int64_t seed = -1;

    void add(CLI::App* app) {
        app->add_option("--config", config_path, "run configuration JSON");
        app->add_option("--level", level, "search space level (s,m,l,x,s-mini,m-mini)");
        app->add_option("--out", out, "output directory");
        app->add_option("--run-name", run_name, "run directory name (default: timestamped)");
        app->add_option("--seed", seed, "random seed override");
    }

    cli::RunConfig resolve() const {
        cli::RunConfig cfg =
            config_path.empty() ? cli::default_run_config() : cli::load_run_config(config_path);
        if (!level.empty()) {
            cfg.level = level;
            cfg.space = supernet::SearchSpaceSpec::preset(level, cfg.dataset.n_classes);
        }
        if (!out.empty()) cfg.out_dir = out;
        if (!run_name.empty()) cfg.run_name = run_name;
        if (seed >= 0) cfg.bilevel.seed = std::uint64_t(seed);
        cfg.validate();
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentiable backbone/FPN architecture search"};
    app.require_subcommand(1);

    CommonOpts search_opts;
    CLI::App* search_cmd = app.add_subcommand("search", "run the bi-level architecture search");
    search_opts.add(search_cmd);

    std::string alpha_path, derive_out = "runs", derive_name;
    CLI::App* derive_cmd =
        app.add_subcommand("derive", "derive a genotype from an alpha checkpoint");
    derive_cmd->add_option("--alphas", alpha_path, "alpha checkpoint JSON")->required();
    derive_cmd->add_option("--out", derive_out, "output directory");
    derive_cmd->add_option("--run-name", derive_name, "run directory name");

    CommonOpts eval_opts;
    std::string genotype_path;
    CLI::App* eval_cmd = app.add_subcommand("eval", "train a derived architecture from scratch");
    eval_cmd->add_option("--genotype", genotype_path, "genotype JSON")->required();
    eval_opts.add(eval_cmd);

    std::string count_level = "all";
    CLI::App* count_cmd = app.add_subcommand("count-space", "exact search-space sizes");
    count_cmd->add_option("--level", count_level, "level or 'all'");

    CLI::App* selfcheck_cmd =
        app.add_subcommand("selfcheck", "run the built-in invariant suite");

    std::string data_out;
    cli::DatasetConfig data_cfg;
    std::int64_t data_seed = -1;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset");
    gen_cmd->add_option("--out", data_out, "dataset directory")->required();
    gen_cmd->add_option("--n", data_cfg.n, "number of samples");
    gen_cmd->add_option("--image-size", data_cfg.image_size, "image side (multiple of 32)");
    gen_cmd->add_option("--classes", data_cfg.n_classes, "number of classes");
    gen_cmd->add_option("--objects-min", data_cfg.objects_min, "min objects per image");
    gen_cmd->add_option("--objects-max", data_cfg.objects_max, "max objects per image");
    gen_cmd->add_option("--seed", data_seed, "dataset seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (search_cmd->parsed()) return cli::cmd_search(search_opts.resolve());
        if (derive_cmd->parsed()) return cli::cmd_derive(alpha_path, derive_out, derive_name);
        if (eval_cmd->parsed()) return cli::cmd_eval(genotype_path, eval_opts.resolve());
        if (count_cmd->parsed()) return cli::cmd_count_space(count_level);
        if (selfcheck_cmd->parsed()) return cli::cmd_selfcheck();
        if (gen_cmd->parsed()) {
            if (data_seed >= 0) data_cfg.seed = std::uint64_t(data_seed);
            return cli::cmd_gen_data(data_cfg, data_out);
        }
    } catch (const diffcore::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const diffcore::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

#include "cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli/dataset_io.hpp"
#include "cli/selfcheck.hpp"
#include "cli/synthetic.hpp"
#include "search/loop.hpp"
#include "supernet/counting.hpp"
#include "supernet/json_io.hpp"
#include "supernet/stats.hpp"

namespace cli {

namespace fs = std::filesystem;
using supernet::check_keys;
using supernet::Json;

std::string arch_params_to_json(const supernet::ArchParams& params,
                                const supernet::SearchSpaceSpec& spec) {
    Json j;
    j["version"] = 1;
    j["spec_echo"] = supernet::spec_to_json_obj(spec);
    Json alphas = Json::array();
    for (const auto& v : params.vecs) {
        Json a;
        a["name"] = v.name;
        a["family"] = supernet::alpha_family_name(v.family);
        a["values"] = v.t.values();
        alphas.push_back(std::move(a));
    }
    j["alphas"] = std::move(alphas);
    return j.dump(2) + "\n";
}

LoadedParams arch_params_from_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw diffcore::InputError(std::string("alpha checkpoint: ") + e.what());
    }
    check_keys(j, "alpha checkpoint", {"version", "spec_echo", "alphas"});
    if (j.at("version").get<int>() != 1)
        throw diffcore::InputError("alpha checkpoint: unsupported version");
    LoadedParams out{supernet::ArchParams{}, supernet::spec_from_json_obj(j.at("spec_echo"))};
    out.params = supernet::build_arch_params(out.spec);
    const auto& alphas = j.at("alphas");
    if (alphas.size() != out.params.vecs.size())
        throw diffcore::InputError("alpha checkpoint: expected " +
                                   std::to_string(out.params.vecs.size()) + " vectors, got " +
                                   std::to_string(alphas.size()));
    for (std::size_t i = 0; i < out.params.vecs.size(); ++i) {
        const Json& a = alphas[i];
        check_keys(a, "alpha entry", {"name", "family", "values"});
        auto& vec = out.params.vecs[i];
        if (a.at("name").get<std::string>() != vec.name)
            throw diffcore::InputError("alpha checkpoint: vector '" +
                                       a.at("name").get<std::string>() + "' out of order, expected '" +
                                       vec.name + "'");
        auto values = a.at("values").get<std::vector<float>>();
        if (values.size() != vec.t.values().size())
            throw diffcore::InputError("alpha checkpoint: bad length for '" + vec.name + "'");
        vec.t.values() = std::move(values);
    }
    return out;
}

std::string make_run_dir(const std::string& out_dir, const std::string& run_name,
                         const std::string& kind) {
    fs::create_directories(out_dir);
    if (!run_name.empty()) {
        const fs::path p = fs::path(out_dir) / run_name;
        if (fs::exists(p))
            throw diffcore::ConfigError("run directory already exists: " + p.string());
        fs::create_directories(p);
        return p.string();
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&now));
    for (int i = 0;; ++i) {
        std::string name = kind + "-" + stamp + (i == 0 ? "" : "-" + std::to_string(i));
        const fs::path p = fs::path(out_dir) / name;
        if (!fs::exists(p)) {
            fs::create_directories(p);
            return p.string();
        }
    }
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<search::Sample> resolve_dataset(const RunConfig& cfg) {
    if (!cfg.dataset.dir.empty()) return load_dataset(cfg.dataset.dir);
    return gen_synthetic_dataset(cfg.dataset);
}

std::string count_report(const std::string& level) {
    const auto spec = supernet::SearchSpaceSpec::preset(level);
    const auto c = supernet::count_search_space(spec);
    std::ostringstream os;
    os << "level " << level << " (L_D=" << spec.l_d() << ", L_C=" << spec.l_c()
       << ", L_B=" << spec.l_b() << ", K_B=" << spec.k_b() << ")\n";
    os << "  backbone " << c.backbone_sci << "  = " << c.backbone.str() << "\n";
    os << "  fpn      " << c.fpn_sci << "  = " << c.fpn.str() << "\n";
    os << "  total    " << c.total_sci << "  = " << c.total.str() << "\n";
    return os.str();
}

}  // namespace

int cmd_gen_data(const DatasetConfig& cfg, const std::string& out_dir) {
    auto samples = gen_synthetic_dataset(cfg);
    save_dataset(out_dir, samples);
    std::cout << "wrote " << samples.size() << " samples (" << cfg.image_size << "x"
              << cfg.image_size << ", " << cfg.n_classes << " classes) to " << out_dir << "\n";
    return 0;
}

int cmd_search(const RunConfig& cfg) {
    cfg.validate();
    const std::string run_dir = make_run_dir(cfg.out_dir, cfg.run_name, "search");
    write_file(run_dir + "/config.json", run_config_to_json(cfg));

    auto dataset = resolve_dataset(cfg);
    std::cout << "searching level " << cfg.level << " on " << dataset.size() << " samples for "
              << cfg.bilevel.epochs << " epochs (seed " << cfg.bilevel.seed << ")\n";
    search::SearchResult result = search::run_search(cfg.space, dataset, cfg.bilevel);

    write_file(run_dir + "/genotype.json", supernet::genotype_to_json(result.genotype));
    write_file(run_dir + "/alpha.json", arch_params_to_json(result.params, cfg.space));
    write_file(run_dir + "/metrics.csv", search::metrics_csv(result.metrics));

    std::ostringstream summary;
    summary << "search run\n==========\n";
    summary << "level: " << cfg.level << ", seed: " << cfg.bilevel.seed
            << ", epochs: " << cfg.bilevel.epochs << ", samples: " << dataset.size() << "\n";
    if (!result.metrics.empty()) {
        summary << "weight loss: first " << result.metrics.front().weight_loss << ", last "
                << result.metrics.back().weight_loss << "\n";
        summary << "expansion-alpha entropy: first "
                << result.metrics.front().alpha_entropy_expansion << ", last "
                << result.metrics.back().alpha_entropy_expansion << "\n";
    }
    const auto cost = supernet::count_params_flops(
        result.genotype, {cfg.dataset.image_size, cfg.dataset.image_size});
    summary << "derived architecture: " << cost.params << " params, " << cost.macs
            << " MACs at " << cfg.dataset.image_size << "x" << cfg.dataset.image_size << "\n";
    summary << "supernet weights: " << result.net.weight_param_count() << " params\n";
    write_file(run_dir + "/summary.txt", summary.str());

    std::cout << summary.str();
    std::cout << "outputs in " << run_dir << "\n";
    return 0;
}

int cmd_derive(const std::string& alpha_path, const std::string& out_dir,
               const std::string& run_name) {
    LoadedParams loaded = arch_params_from_json(read_file(alpha_path));
    supernet::Genotype geno = supernet::derive(loaded.params, loaded.spec);
    const std::string run_dir = make_run_dir(out_dir, run_name, "derive");
    write_file(run_dir + "/genotype.json", supernet::genotype_to_json(geno));
    std::cout << "derived genotype from " << alpha_path << " -> " << run_dir
              << "/genotype.json\n";
    return 0;
}

int cmd_eval(const std::string& genotype_path, const RunConfig& cfg) {
    supernet::Genotype geno = supernet::genotype_from_json(read_file(genotype_path));
    if (geno.echo.n_classes != cfg.dataset.n_classes)
        throw diffcore::ConfigError("eval: genotype head classes differ from the dataset");
    const std::string run_dir = make_run_dir(cfg.out_dir, cfg.run_name, "eval");

    auto dataset = resolve_dataset(cfg);
    std::cout << "training derived architecture on " << dataset.size() << " samples for "
              << cfg.bilevel.epochs << " epochs\n";
    search::EvalResult result =
        search::train_derived(geno, dataset, cfg.bilevel.epochs, cfg.bilevel);

    write_file(run_dir + "/metrics.csv", search::metrics_csv(result.metrics));
    std::ostringstream summary;
    summary << "derived-network training\n========================\n";
    summary << "genotype: " << genotype_path << "\n";
    summary << "params: " << result.param_count << "\n";
    if (!result.metrics.empty())
        summary << "loss: first " << result.metrics.front().weight_loss << ", last "
                << result.metrics.back().weight_loss << "\n";
    write_file(run_dir + "/summary.txt", summary.str());
    std::cout << summary.str() << "outputs in " << run_dir << "\n";
    return 0;
}

int cmd_count_space(const std::string& level) {
    std::ostringstream os;
    if (level == "all") {
        for (const char* l : {"s", "m", "l", "x"}) os << count_report(l);
    } else {
        std::string l = level;
        // counting always reports the full-width presets; the -mini spaces
        // share their block counts, so the sizes are identical anyway
        if (l.size() > 5 && l.substr(l.size() - 5) == "-mini") l = l.substr(0, l.size() - 5);
        os << count_report(l);
    }
    os << "\nnotes:\n";
    os << "  - per fusion block the C3 width factor enters once per scale (2^3 = 8);\n";
    os << "    a single shared factor 2 would give 6.1e23 for the s-level FPN instead\n";
    os << "    of the published 9.8e24, so the per-scale reading is used.\n";
    os << "  - the 'total' column multiplies the two already-rounded factors, matching\n";
    os << "    the published table (s: 7.9 * 9.8 -> 7.7e36; the exact product rounds\n";
    os << "    to 7.8e36).\n";
    std::cout << os.str();
    return 0;
}

int cmd_selfcheck() {
    const auto results = run_selfcheck();
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[ok]   " : "[FAIL] ") << r.name << " — " << r.detail << "\n";
        all = all && r.pass;
    }
    std::cout << (all ? "selfcheck passed" : "selfcheck FAILED") << " (" << results.size()
              << " checks)\n";
    return all ? 0 : 1;
}

}  // namespace cli

#include "cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "supernet/json_io.hpp"

namespace cli {

using supernet::check_keys;
using supernet::Json;

void DatasetConfig::validate() const {
    if (n < 1) throw diffcore::ConfigError("dataset: n must be >= 1");
    if (image_size < 32 || image_size % 32 != 0)
        throw diffcore::ConfigError("dataset: image_size must be a positive multiple of 32");
    if (n_classes < 1) throw diffcore::ConfigError("dataset: n_classes must be >= 1");
    if (objects_min < 1 || objects_max < objects_min)
        throw diffcore::ConfigError("dataset: bad object count range");
    if (!(object_min_size > 0.0) || object_max_size < object_min_size)
        throw diffcore::ConfigError("dataset: bad object size range");
    if (object_max_size > 1.0)
        throw diffcore::ConfigError("dataset: objects larger than the image are impossible");
}

void RunConfig::validate() const {
    space.validate();
    bilevel.validate();
    dataset.validate();
    if (space.n_classes != dataset.n_classes)
        throw diffcore::ConfigError("config: space/head n_classes differs from the dataset");
    if (out_dir.empty()) throw diffcore::ConfigError("config: out_dir must not be empty");
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.bilevel.epochs = 10;
    cfg.space = supernet::SearchSpaceSpec::preset(cfg.level, cfg.dataset.n_classes);
    return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw diffcore::InputError(std::string("config: ") + e.what());
    }
    check_keys(j, "config", {},
               {"level", "space", "seed", "epochs", "batch_size", "weight_lr", "arch_lr",
                "momentum", "weight_decay", "split_ratio", "warmup_epochs", "tau0", "tau_min",
                "out_dir", "run_name", "dataset"});
    RunConfig cfg = default_run_config();
    if (j.contains("level") && j.contains("space"))
        throw diffcore::InputError("config: give either 'level' or 'space', not both");

    if (j.contains("dataset")) {
        const Json& d = j.at("dataset");
        check_keys(d, "config.dataset", {},
                   {"n", "image_size", "n_classes", "objects_min", "objects_max",
                    "object_min_size", "object_max_size", "seed", "dir"});
        if (d.contains("n")) cfg.dataset.n = d.at("n").get<int>();
        if (d.contains("image_size")) cfg.dataset.image_size = d.at("image_size").get<int>();
        if (d.contains("n_classes")) cfg.dataset.n_classes = d.at("n_classes").get<int>();
        if (d.contains("objects_min")) cfg.dataset.objects_min = d.at("objects_min").get<int>();
        if (d.contains("objects_max")) cfg.dataset.objects_max = d.at("objects_max").get<int>();
        if (d.contains("object_min_size"))
            cfg.dataset.object_min_size = d.at("object_min_size").get<double>();
        if (d.contains("object_max_size"))
            cfg.dataset.object_max_size = d.at("object_max_size").get<double>();
        if (d.contains("seed")) cfg.dataset.seed = d.at("seed").get<std::uint64_t>();
        if (d.contains("dir")) cfg.dataset.dir = d.at("dir").get<std::string>();
    }

    if (j.contains("space")) {
        cfg.space = supernet::spec_from_json_obj(j.at("space"));
        cfg.level = cfg.space.level;
    } else {
        if (j.contains("level")) cfg.level = j.at("level").get<std::string>();
        if (!supernet::SearchSpaceSpec::is_known_level(cfg.level))
            throw diffcore::InputError("config: unknown level '" + cfg.level + "'");
        cfg.space = supernet::SearchSpaceSpec::preset(cfg.level, cfg.dataset.n_classes);
    }

    auto& b = cfg.bilevel;
    if (j.contains("seed")) b.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("epochs")) b.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) b.batch_size = j.at("batch_size").get<int>();
    if (j.contains("weight_lr")) b.weight_lr = j.at("weight_lr").get<double>();
    if (j.contains("arch_lr")) b.arch_lr = j.at("arch_lr").get<double>();
    if (j.contains("momentum")) b.momentum = j.at("momentum").get<double>();
    if (j.contains("weight_decay")) b.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("split_ratio")) b.split_ratio = j.at("split_ratio").get<double>();
    if (j.contains("warmup_epochs")) b.warmup_epochs = j.at("warmup_epochs").get<int>();
    if (j.contains("tau0")) b.tau0 = j.at("tau0").get<double>();
    if (j.contains("tau_min")) b.tau_min = j.at("tau_min").get<double>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("run_name")) cfg.run_name = j.at("run_name").get<std::string>();

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw diffcore::InputError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    Json j;
    j["level"] = cfg.level;
    j["space"] = supernet::spec_to_json_obj(cfg.space);
    j["seed"] = cfg.bilevel.seed;
    j["epochs"] = cfg.bilevel.epochs;
    j["batch_size"] = cfg.bilevel.batch_size;
    j["weight_lr"] = cfg.bilevel.weight_lr;
    j["arch_lr"] = cfg.bilevel.arch_lr;
    j["momentum"] = cfg.bilevel.momentum;
    j["weight_decay"] = cfg.bilevel.weight_decay;
    j["split_ratio"] = cfg.bilevel.split_ratio;
    j["warmup_epochs"] = cfg.bilevel.warmup_epochs;
    j["tau0"] = cfg.bilevel.tau0;
    j["tau_min"] = cfg.bilevel.tau_min;
    j["out_dir"] = cfg.out_dir;
    if (!cfg.run_name.empty()) j["run_name"] = cfg.run_name;
    Json d;
    d["n"] = cfg.dataset.n;
    d["image_size"] = cfg.dataset.image_size;
    d["n_classes"] = cfg.dataset.n_classes;
    d["objects_min"] = cfg.dataset.objects_min;
    d["objects_max"] = cfg.dataset.objects_max;
    d["object_min_size"] = cfg.dataset.object_min_size;
    d["object_max_size"] = cfg.dataset.object_max_size;
    d["seed"] = cfg.dataset.seed;
    if (!cfg.dataset.dir.empty()) d["dir"] = cfg.dataset.dir;
    j["dataset"] = std::move(d);
    return j.dump(2) + "\n";
}

}  // namespace cli

#include "cli/dataset_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "supernet/json_io.hpp"

namespace cli {

namespace fs = std::filesystem;
using supernet::check_keys;
using supernet::Json;

void save_dataset(const std::string& dir, const std::vector<search::Sample>& samples) {
    if (samples.empty()) throw diffcore::InputError("save_dataset: nothing to write");
    fs::create_directories(dir);
    Json manifest;
    manifest["version"] = 1;
    manifest["n"] = int(samples.size());
    manifest["height"] = samples[0].height;
    manifest["width"] = samples[0].width;
    Json list = Json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const search::Sample& s = samples[i];
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05zu.bin", i);
        std::ofstream blob(fs::path(dir) / name, std::ios::binary);
        if (!blob) throw std::runtime_error("save_dataset: cannot write " + std::string(name));
        blob.write(reinterpret_cast<const char*>(s.image.data()),
                   std::streamsize(s.image.size() * sizeof(float)));
        Json boxes = Json::array();
        for (const auto& b : s.boxes)
            boxes.push_back(Json{{"cls", b.cls}, {"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}});
        list.push_back(Json{{"file", name}, {"boxes", std::move(boxes)}});
    }
    manifest["samples"] = std::move(list);
    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("save_dataset: cannot write manifest.json in " + dir);
    mf << manifest.dump(2) << "\n";
}

std::vector<search::Sample> load_dataset(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("load_dataset: cannot open " + dir + "/manifest.json");
    std::ostringstream ss;
    ss << mf.rdbuf();
    Json manifest;
    try {
        manifest = Json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw diffcore::InputError(std::string("manifest: ") + e.what());
    }
    check_keys(manifest, "manifest", {"version", "n", "height", "width", "samples"});
    const int h = manifest.at("height").get<int>();
    const int w = manifest.at("width").get<int>();
    const int n = manifest.at("n").get<int>();
    const auto& list = manifest.at("samples");
    if (int(list.size()) != n) throw diffcore::InputError("manifest: sample count mismatch");

    std::vector<search::Sample> out;
    for (const auto& entry : list) {
        check_keys(entry, "manifest sample", {"file", "boxes"});
        search::Sample s;
        s.height = h;
        s.width = w;
        s.image.resize(std::size_t(3) * h * w);
        std::ifstream blob(fs::path(dir) / entry.at("file").get<std::string>(), std::ios::binary);
        if (!blob)
            throw std::runtime_error("load_dataset: cannot open " +
                                     entry.at("file").get<std::string>());
        blob.read(reinterpret_cast<char*>(s.image.data()),
                  std::streamsize(s.image.size() * sizeof(float)));
        if (std::size_t(blob.gcount()) != s.image.size() * sizeof(float))
            throw std::runtime_error("load_dataset: short read on " +
                                     entry.at("file").get<std::string>());
        for (const auto& b : entry.at("boxes")) {
            check_keys(b, "box", {"cls", "cx", "cy", "w", "h"});
            s.boxes.push_back({b.at("cls").get<int>(), b.at("cx").get<double>(),
                               b.at("cy").get<double>(), b.at("w").get<double>(),
                               b.at("h").get<double>()});
        }
        s.targets = search::build_grid_targets(s.boxes, h, w);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace cli

#include "supernet/genotype.hpp"

#include <set>

#include "chansearch/slicing.hpp"
#include "kernelreuse/candidates.hpp"
#include "supernet/json_io.hpp"

namespace supernet {

namespace {

void check_expansion(double v, const std::vector<chansearch::ExpansionRate>& allowed,
                     const std::string& where) {
    for (const auto& e : allowed)
        if (e.value() == v) return;
    throw diffcore::InputError("genotype: expansion " + std::to_string(v) +
                               " not allowed at " + where);
}

void check_c3(const C3Gene& c3, int m, const std::string& where) {
    check_expansion(c3.expansion, chansearch::expansion_two(), where + ".exp");
    if (int(c3.cells.size()) != m)
        throw diffcore::InputError("genotype: " + where + " has " +
                                   std::to_string(c3.cells.size()) + " cells, expected " +
                                   std::to_string(m));
    for (std::size_t j = 0; j < c3.cells.size(); ++j) {
        const auto& b = c3.cells[j];
        const std::string bp = where + ".b" + std::to_string(j);
        check_expansion(b.expansion1, chansearch::expansion_three(), bp + ".e1");
        check_expansion(b.expansion2, chansearch::expansion_three(), bp + ".e2");
        kernelreuse::OpKind k = kernelreuse::op_from_name(b.op);
        if (k == kernelreuse::OpKind::Conv1x1)
            throw diffcore::InputError("genotype: conv1x1 is not a bottleneck candidate at " + bp);
    }
}

}  // namespace

void Genotype::validate() const {
    echo.validate();
    if (version != 1) throw diffcore::InputError("genotype: unsupported version");
    if (int(downs.size()) != echo.l_d() || int(backbone.size()) != echo.l_c())
        throw diffcore::InputError("genotype: backbone layer counts do not match the space");
    for (std::size_t i = 0; i < downs.size(); ++i) {
        kernelreuse::op_from_name(downs[i].op);
        check_expansion(downs[i].expansion, chansearch::expansion_three(),
                        "down" + std::to_string(i));
    }
    for (std::size_t i = 0; i < backbone.size(); ++i)
        check_c3(backbone[i], echo.backbone_c3[i].m, "bb.c3_" + std::to_string(i));

    for (const FusionGene* fg : {&topdown, &bottomup}) {
        if (int(fg->nodes.size()) != kScales)
            throw diffcore::InputError("genotype: fusion block needs one node per scale");
        std::set<int> strides_seen;
        for (std::size_t j = 0; j < fg->nodes.size(); ++j) {
            const NodeGene& node = fg->nodes[j];
            strides_seen.insert(node.stride);
            const int preds = kScales + int(j);
            if (node.edges[0].pred == node.edges[1].pred)
                throw diffcore::InputError("genotype: node keeps the same predecessor twice");
            for (const EdgeGene& e : node.edges) {
                if (e.pred < 0 || e.pred >= preds)
                    throw diffcore::InputError("genotype: predecessor index out of range");
                kernelreuse::op_from_name(e.op);
                check_expansion(e.expansion, chansearch::expansion_three(), "fusion edge");
            }
            if (node.edges[0].pred > node.edges[1].pred)
                throw diffcore::InputError("genotype: kept edges must be ordered by predecessor");
            check_c3(node.c3, echo.fpn_c3_m, "fpn c3");
        }
        if (int(strides_seen.size()) != kScales)
            throw diffcore::InputError("genotype: fusion nodes must cover all scales");
    }
}

// ---- json ----

void check_keys(const Json& obj, const std::string& context,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional) {
    if (!obj.is_object()) throw diffcore::InputError(context + ": expected an object");
    for (const auto& k : required)
        if (!obj.contains(k))
            throw diffcore::InputError(context + ": missing field '" + k + "'");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool known = false;
        for (const auto& k : required)
            if (k == key) known = true;
        for (const auto& k : optional)
            if (k == key) known = true;
        if (!known) throw diffcore::InputError(context + ": unknown field '" + key + "'");
    }
}

Json spec_to_json_obj(const SearchSpaceSpec& spec) {
    Json j;
    j["level"] = spec.level;
    j["channel_divisor"] = spec.channel_divisor;
    j["focus_channels"] = spec.focus_channels;
    j["down_channels"] = spec.down_channels;
    Json c3s = Json::array();
    for (const auto& c : spec.backbone_c3) c3s.push_back(Json{{"channels", c.channels}, {"m", c.m}});
    j["backbone_c3"] = std::move(c3s);
    j["spp_channels"] = spec.spp_channels;
    j["fpn_channels"] = spec.fpn_channels;
    j["fpn_c3_m"] = spec.fpn_c3_m;
    j["n_classes"] = spec.n_classes;
    return j;
}

SearchSpaceSpec spec_from_json_obj(const Json& j) {
    check_keys(j, "space",
               {"level", "channel_divisor", "focus_channels", "down_channels", "backbone_c3",
                "spp_channels", "fpn_channels", "fpn_c3_m", "n_classes"});
    SearchSpaceSpec s;
    s.level = j.at("level").get<std::string>();
    s.channel_divisor = j.at("channel_divisor").get<int>();
    s.focus_channels = j.at("focus_channels").get<int>();
    s.down_channels = j.at("down_channels").get<std::vector<int>>();
    for (const auto& c : j.at("backbone_c3")) {
        check_keys(c, "space.backbone_c3", {"channels", "m"});
        s.backbone_c3.push_back({c.at("channels").get<int>(), c.at("m").get<int>()});
    }
    s.spp_channels = j.at("spp_channels").get<int>();
    s.fpn_channels = j.at("fpn_channels").get<std::vector<int>>();
    s.fpn_c3_m = j.at("fpn_c3_m").get<int>();
    s.n_classes = j.at("n_classes").get<int>();
    s.validate();
    return s;
}

namespace {

Json c3_to_json(const C3Gene& c) {
    Json j;
    j["block_kind"] = "c3";
    j["expansion"] = c.expansion;
    Json cells = Json::array();
    for (const auto& b : c.cells)
        cells.push_back(Json{{"op", b.op}, {"expansion1", b.expansion1}, {"expansion2", b.expansion2}});
    j["bottlenecks"] = std::move(cells);
    return j;
}

C3Gene c3_from_json(const Json& j) {
    check_keys(j, "c3", {"block_kind", "expansion", "bottlenecks"});
    if (j.at("block_kind") != "c3") throw diffcore::InputError("genotype: expected a c3 block");
    C3Gene c;
    c.expansion = j.at("expansion").get<double>();
    for (const auto& b : j.at("bottlenecks")) {
        check_keys(b, "bottleneck", {"op", "expansion1", "expansion2"});
        c.cells.push_back({b.at("op").get<std::string>(), b.at("expansion1").get<double>(),
                           b.at("expansion2").get<double>()});
    }
    return c;
}

Json fusion_to_json(const FusionGene& f) {
    Json nodes = Json::array();
    for (const auto& n : f.nodes) {
        Json edges = Json::array();
        for (const auto& e : n.edges)
            edges.push_back(Json{{"pred", e.pred}, {"op", e.op}, {"expansion", e.expansion}});
        Json jn;
        jn["stride"] = n.stride;
        jn["edges"] = std::move(edges);
        jn["c3"] = c3_to_json(n.c3);
        nodes.push_back(std::move(jn));
    }
    return nodes;
}

FusionGene fusion_from_json(const Json& j) {
    FusionGene f;
    for (const auto& jn : j) {
        check_keys(jn, "fusion node", {"stride", "edges", "c3"});
        NodeGene n;
        n.stride = jn.at("stride").get<int>();
        const auto& edges = jn.at("edges");
        if (edges.size() != 2)
            throw diffcore::InputError("genotype: fusion node must keep exactly 2 edges");
        for (std::size_t i = 0; i < 2; ++i) {
            check_keys(edges[i], "fusion edge", {"pred", "op", "expansion"});
            n.edges[i] = {edges[i].at("pred").get<int>(), edges[i].at("op").get<std::string>(),
                          edges[i].at("expansion").get<double>()};
        }
        n.c3 = c3_from_json(jn.at("c3"));
        f.nodes.push_back(std::move(n));
    }
    return f;
}

}  // namespace

Json genotype_to_json_obj(const Genotype& g) {
    Json j;
    j["version"] = g.version;
    j["level"] = g.level;
    Json backbone = Json::array();
    for (std::size_t i = 0; i < g.downs.size(); ++i) {
        backbone.push_back(Json{{"block_kind", "downsample"},
                                {"op", g.downs[i].op},
                                {"expansion", g.downs[i].expansion}});
        if (i < g.backbone.size()) backbone.push_back(c3_to_json(g.backbone[i]));
    }
    j["backbone"] = std::move(backbone);
    Json fpn;
    fpn["topdown"] = fusion_to_json(g.topdown);
    fpn["bottomup"] = fusion_to_json(g.bottomup);
    j["fpn"] = std::move(fpn);
    j["spec_echo"] = spec_to_json_obj(g.echo);
    return j;
}

Genotype genotype_from_json_obj(const Json& j) {
    check_keys(j, "genotype", {"version", "level", "backbone", "fpn", "spec_echo"});
    Genotype g;
    g.version = j.at("version").get<int>();
    g.level = j.at("level").get<std::string>();
    for (const auto& entry : j.at("backbone")) {
        if (!entry.is_object() || !entry.contains("block_kind"))
            throw diffcore::InputError("genotype: backbone entry without block_kind");
        const std::string kind = entry.at("block_kind").get<std::string>();
        if (kind == "downsample") {
            check_keys(entry, "downsample", {"block_kind", "op", "expansion"});
            g.downs.push_back({entry.at("op").get<std::string>(), entry.at("expansion").get<double>()});
        } else if (kind == "c3") {
            g.backbone.push_back(c3_from_json(entry));
        } else {
            throw diffcore::InputError("genotype: unknown block_kind '" + kind + "'");
        }
    }
    const auto& fpn = j.at("fpn");
    check_keys(fpn, "fpn", {"topdown", "bottomup"});
    g.topdown = fusion_from_json(fpn.at("topdown"));
    g.bottomup = fusion_from_json(fpn.at("bottomup"));
    g.echo = spec_from_json_obj(j.at("spec_echo"));
    g.validate();
    return g;
}

std::string genotype_to_json(const Genotype& g) { return genotype_to_json_obj(g).dump(2) + "\n"; }

Genotype genotype_from_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw diffcore::InputError(std::string("genotype: ") + e.what());
    }
    return genotype_from_json_obj(j);
}

std::string spec_to_json(const SearchSpaceSpec& spec) { return spec_to_json_obj(spec).dump(2) + "\n"; }

}  // namespace supernet

#include "cli/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "diffcore/rng.hpp"

namespace cli {

namespace {

struct Rgb {
    double r, g, b;
};

Rgb class_color(int cls, int n_classes) {
    // evenly spaced hues, fixed saturation/value
    const double h = 6.0 * double(cls) / double(n_classes);
    const double s = 0.8, v = 0.9;
    const int i = int(h) % 6;
    const double f = h - std::floor(h);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (i) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

}  // namespace

std::vector<search::Sample> gen_synthetic_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    diffcore::Rng rng(cfg.seed);
    const int size = cfg.image_size;
    std::vector<search::Sample> out;
    out.reserve(std::size_t(cfg.n));

    for (int idx = 0; idx < cfg.n; ++idx) {
        search::Sample s;
        s.height = size;
        s.width = size;
        s.image.resize(std::size_t(3) * size * size);
        for (float& v : s.image) v = float(0.08 + 0.06 * rng.uniform());

        const int count = cfg.objects_min + rng.bounded(cfg.objects_max - cfg.objects_min + 1);
        for (int b = 0; b < count; ++b) {
            search::BoxLabel box;
            box.cls = rng.bounded(cfg.n_classes);
            // rejection-place so rectangles never overlap (overlaps would
            // repaint an earlier box's center and corrupt its class label)
            bool placed = false;
            for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
                box.w = rng.uniform(cfg.object_min_size, cfg.object_max_size);
                box.h = rng.uniform(cfg.object_min_size, cfg.object_max_size);
                box.cx = rng.uniform(box.w / 2, 1.0 - box.w / 2);
                box.cy = rng.uniform(box.h / 2, 1.0 - box.h / 2);
                placed = true;
                for (const auto& other : s.boxes)
                    if (std::abs(box.cx - other.cx) * 2 < box.w + other.w &&
                        std::abs(box.cy - other.cy) * 2 < box.h + other.h)
                        placed = false;
            }
            if (!placed) break;
            const Rgb color = class_color(box.cls, cfg.n_classes);
            const int x0 = std::max(0, int((box.cx - box.w / 2) * size));
            const int x1 = std::min(size - 1, int((box.cx + box.w / 2) * size));
            const int y0 = std::max(0, int((box.cy - box.h / 2) * size));
            const int y1 = std::min(size - 1, int((box.cy + box.h / 2) * size));
            const double ch[3] = {color.r, color.g, color.b};
            for (int c = 0; c < 3; ++c)
                for (int y = y0; y <= y1; ++y)
                    for (int x = x0; x <= x1; ++x)
                        s.image[std::size_t((c * size + y) * size + x)] =
                            float(std::clamp(ch[c] + 0.02 * (rng.uniform() - 0.5), 0.0, 1.0));
            s.boxes.push_back(box);
        }
        s.targets = search::build_grid_targets(s.boxes, size, size);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace cli

#include "search/data.hpp"

#include <set>

#include "diffcore/errors.hpp"

namespace search {

GridTargets build_grid_targets(const std::vector<BoxLabel>& boxes, int image_h, int image_w) {
    if (image_h % 32 != 0 || image_w % 32 != 0)
        throw diffcore::ConfigError("grid targets: image dims must be multiples of 32");
    GridTargets out;
    for (int s = 0; s < supernet::kScales; ++s) {
        const int gh = image_h / supernet::kStrides[s];
        const int gw = image_w / supernet::kStrides[s];
        std::set<std::pair<int, int>> taken;
        for (const BoxLabel& b : boxes) {
            int gx = std::min(int(b.cx * gw), gw - 1);
            int gy = std::min(int(b.cy * gh), gh - 1);
            if (!taken.insert({gy, gx}).second) continue;  // first box wins
            CellTarget t;
            t.gy = gy;
            t.gx = gx;
            t.cls = b.cls;
            t.box = {float(b.cx * gw - gx), float(b.cy * gh - gy), float(b.w), float(b.h)};
            out.cells[std::size_t(s)].push_back(t);
        }
    }
    return out;
}

diffcore::Tensor<float> batch_images(const std::vector<const Sample*>& samples) {
    if (samples.empty()) throw diffcore::InputError("batch_images: empty batch");
    const int h = samples[0]->height, w = samples[0]->width;
    std::vector<float> data;
    data.reserve(samples.size() * 3 * std::size_t(h) * std::size_t(w));
    for (const Sample* s : samples) {
        if (s->height != h || s->width != w)
            throw diffcore::InputError("batch_images: mixed image sizes in one batch");
        if (std::int64_t(s->image.size()) != std::int64_t(3) * h * w)
            throw diffcore::InputError("batch_images: image buffer size mismatch");
        data.insert(data.end(), s->image.begin(), s->image.end());
    }
    return diffcore::Tensor<float>::from({int(samples.size()), 3, h, w}, std::move(data));
}

BatchTargets batch_targets(const std::vector<const Sample*>& samples) {
    BatchTargets out;
    for (std::size_t n = 0; n < samples.size(); ++n)
        for (int s = 0; s < supernet::kScales; ++s)
            for (const CellTarget& c : samples[n]->targets.cells[std::size_t(s)])
                out.cells[std::size_t(s)].push_back({int(n), c.gy, c.gx, c.cls, c.box});
    return out;
}

}  // namespace search

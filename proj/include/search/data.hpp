#pragma once

#include <array>
#include <vector>

#include "diffcore/tensor.hpp"
#include "supernet/space.hpp"

namespace search {

// One labelled box, normalized coordinates, fully inside the image.
struct BoxLabel {
    int cls = 0;
    double cx = 0, cy = 0, w = 0, h = 0;
};

// A positive cell at one scale: the cell holding a box center, with the
// (offset-in-cell, offset, width, height) regression target.
struct CellTarget {
    int gy = 0, gx = 0, cls = 0;
    std::array<float, 4> box{};
};

struct GridTargets {
    std::array<std::vector<CellTarget>, supernet::kScales> cells;
};

struct Sample {
    int height = 0, width = 0;
    std::vector<float> image;  // 3*H*W, values in [0,1]
    std::vector<BoxLabel> boxes;
    GridTargets targets;
};

// Assigns each box to the cell containing its center at every scale; the
// first box claiming a cell wins.
GridTargets build_grid_targets(const std::vector<BoxLabel>& boxes, int image_h, int image_w);

// Batched positives carry the index of their sample within the batch.
struct BatchCell {
    int n = 0, gy = 0, gx = 0, cls = 0;
    std::array<float, 4> box{};
};

struct BatchTargets {
    std::array<std::vector<BatchCell>, supernet::kScales> cells;
};

diffcore::Tensor<float> batch_images(const std::vector<const Sample*>& samples);
BatchTargets batch_targets(const std::vector<const Sample*>& samples);

}  // namespace search

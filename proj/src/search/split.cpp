#include "search/split.hpp"

#include <cmath>
#include <numeric>

#include "diffcore/errors.hpp"
#include "diffcore/rng.hpp"

namespace search {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(std::size_t n,
                                                                            double ratio,
                                                                            std::uint64_t seed) {
    if (n == 0) throw diffcore::ConfigError("split_dataset: empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw diffcore::ConfigError("split_dataset: ratio must be in (0,1)");
    const std::size_t n_w = std::size_t(std::llround(ratio * double(n)));
    if (n_w == 0 || n_w == n)
        throw diffcore::ConfigError("split_dataset: split leaves one side empty");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    diffcore::Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(idx[i], idx[std::size_t(rng.bounded(int(i + 1)))]);

    return {std::vector<std::size_t>(idx.begin(), idx.begin() + std::ptrdiff_t(n_w)),
            std::vector<std::size_t>(idx.begin() + std::ptrdiff_t(n_w), idx.end())};
}

}  // namespace search

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "diffcore/errors.hpp"

namespace kernelreuse {

// The unified weight bank is spatially fixed at 5x5: the largest effective
// receptive field over all candidates.
inline constexpr int kBankSize = 5;

enum class OpKind { Conv1x1, Conv3x3, Conv5x5, Conv3x3Dilated2 };

struct CandidateOp {
    OpKind kind;
    int kernel;    // native k
    int dilation;  // d
    int padding;   // native padding

    int receptive_field() const { return dilation * (kernel - 1) + 1; }
    bool operator==(const CandidateOp&) const = default;
};

inline CandidateOp candidate(OpKind kind) {
    switch (kind) {
        case OpKind::Conv1x1: return {kind, 1, 1, 0};
        case OpKind::Conv3x3: return {kind, 3, 1, 1};
        case OpKind::Conv5x5: return {kind, 5, 1, 2};
        case OpKind::Conv3x3Dilated2: return {kind, 3, 2, 2};
    }
    throw diffcore::ConfigError("candidate: unknown op kind");
}

inline const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::Conv1x1: return "conv1x1";
        case OpKind::Conv3x3: return "conv3x3";
        case OpKind::Conv5x5: return "conv5x5";
        case OpKind::Conv3x3Dilated2: return "conv3x3_dilated2";
    }
    throw diffcore::ConfigError("op_name: unknown op kind");
}

inline OpKind op_from_name(const std::string& name) {
    if (name == "conv1x1") return OpKind::Conv1x1;
    if (name == "conv3x3") return OpKind::Conv3x3;
    if (name == "conv5x5") return OpKind::Conv5x5;
    if (name == "conv3x3_dilated2") return OpKind::Conv3x3Dilated2;
    throw diffcore::InputError("unknown candidate op '" + name + "'");
}

// Edge super-edges carry all four candidates; bottleneck second convs
// exclude the 1x1.
inline std::vector<CandidateOp> edge_candidates() {
    return {candidate(OpKind::Conv1x1), candidate(OpKind::Conv3x3),
            candidate(OpKind::Conv5x5), candidate(OpKind::Conv3x3Dilated2)};
}

inline std::vector<CandidateOp> bottleneck_candidates() {
    return {candidate(OpKind::Conv3x3), candidate(OpKind::Conv5x5),
            candidate(OpKind::Conv3x3Dilated2)};
}

// 5x5 binary mask selecting a candidate's taps inside the bank.
struct Mask {
    std::array<std::uint8_t, kBankSize * kBankSize> on{};

    bool at(int r, int c) const { return on[std::size_t(r * kBankSize + c)] != 0; }
    int support() const {
        int s = 0;
        for (auto v : on) s += v;
        return s;
    }
};

// Centered embedding of the candidate's taps: for dilation d the taps sit at
// offsets that are multiples of d from the bank center.
inline Mask build_mask(const CandidateOp& op) {
    if (op.receptive_field() > kBankSize)
        throw diffcore::ConfigError("build_mask: receptive field " +
                                    std::to_string(op.receptive_field()) +
                                    " exceeds bank size");
    Mask m;
    const int center = kBankSize / 2;
    const int half = (op.kernel - 1) / 2;
    for (int r = -half; r <= half; ++r)
        for (int c = -half; c <= half; ++c)
            m.on[std::size_t((center + r * op.dilation) * kBankSize + (center + c * op.dilation))] = 1;
    return m;
}

}  // namespace kernelreuse

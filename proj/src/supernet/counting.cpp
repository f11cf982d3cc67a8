#include "supernet/counting.hpp"

#include "diffcore/errors.hpp"

namespace supernet {

namespace {

BigInt ipow(BigInt base, int exp) {
    BigInt r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

struct Sci {
    int digits;     // 10..99, value digits/10
    long exponent;  // power of ten
};

// First two significant digits of a positive integer, rounded half up.
Sci round2(const std::string& dec) {
    long exponent = long(dec.size()) - 1;
    int digits;
    if (dec.size() == 1) {
        digits = (dec[0] - '0') * 10;
    } else {
        digits = (dec[0] - '0') * 10 + (dec[1] - '0');
        if (dec.size() > 2 && dec[2] >= '5') digits++;
        if (digits == 100) {
            digits = 10;
            exponent++;
        }
    }
    return {digits, exponent};
}

std::string fmt(const Sci& s) {
    return std::string(1, char('0' + s.digits / 10)) + "." + char('0' + s.digits % 10) + "e" +
           std::to_string(s.exponent);
}

}  // namespace

std::string sci2(const BigInt& v) {
    if (v <= 0) throw diffcore::InputError("sci2: positive values only");
    return fmt(round2(v.str()));
}

std::string sci2_product(const BigInt& a, const BigInt& b) {
    const Sci sa = round2(a.str());
    const Sci sb = round2(b.str());
    const int prod = sa.digits * sb.digits;  // value prod/100 * 10^(ea+eb)
    Sci sp = round2(std::to_string(prod));
    sp.exponent += sa.exponent + sb.exponent - 2;
    return fmt(sp);
}

SpaceCount count_search_space_counts(int l_d, int l_c, int l_b, int k_b) {
    if (l_d < 0 || l_c < 0 || l_b < 0 || k_b < 0)
        throw diffcore::ConfigError("count_search_space: negative block counts");
    SpaceCount c;
    c.backbone = ipow(12, l_d) * ipow(2, l_c) * ipow(9, l_b);
    // 12 op/width combos on each of the 6 kept edges; C(3,2)*C(4,2)*C(5,2)
    // predecessor topologies; one binary C3 width choice per scale; 9
    // choices per fusion bottleneck.
    const BigInt topologies = 3 * 6 * 10;
    c.fpn_block = ipow(12, 6) * topologies * ipow(2, kScales) * ipow(9, k_b);
    c.fpn = c.fpn_block * c.fpn_block;
    c.total = c.backbone * c.fpn;
    c.backbone_sci = sci2(c.backbone);
    c.fpn_sci = sci2(c.fpn);
    c.total_sci = sci2_product(c.backbone, c.fpn);
    return c;
}

SpaceCount count_search_space(const SearchSpaceSpec& spec) {
    return count_search_space_counts(spec.l_d(), spec.l_c(), spec.l_b(), spec.k_b());
}

}  // namespace supernet

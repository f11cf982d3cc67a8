#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "supernet/genotype.hpp"
#include "supernet/space.hpp"

namespace supernet {

// ordered_json keeps insertion order, which makes parse/serialize
// round-trips byte-stable.
using Json = nlohmann::ordered_json;

// Strict object check: every required key present, nothing else. Unknown
// fields are rejected (typos should fail loudly, not be ignored).
void check_keys(const Json& obj, const std::string& context,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional = {});

Json spec_to_json_obj(const SearchSpaceSpec& spec);
SearchSpaceSpec spec_from_json_obj(const Json& j);

Json genotype_to_json_obj(const Genotype& g);
Genotype genotype_from_json_obj(const Json& j);

}  // namespace supernet

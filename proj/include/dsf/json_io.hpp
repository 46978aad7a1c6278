#pragma once

#include <string>

#include <json.hpp>

#include "dsf/netbuild.hpp"
#include "dsf/verify.hpp"

namespace dsf {

using Json = nlohmann::ordered_json;

Json mat_to_json(const Mat& m);  // row-major nested arrays
Mat mat_from_json(const Json& j, const std::string& what);

Domain domain_from_json(const Json& j);

struct NamedSystem {
  std::string name;
  StateSpace sys;
};

/// System file: { "name", "domain", "A", "B", "C", "D" }.
NamedSystem system_from_json(const Json& j);
Json system_to_json(const NamedSystem& ns);

/// K file: { "K": [[...]] }.
Mat k_from_json(const Json& j);

/// Factor file: { "kind": "left_coprime_factors", "name", "domain",
///                "p", "m", "A", "B", "C", "D" }.
Json factors_to_json(const CoprimeFactors& cf, const std::string& name);
CoprimeFactors factors_from_json(const Json& j);

/// Network file: { "nodes", "inputs", "domain", "name",
///                 "edges": [{ "from", "to", "block" }],
///                 "input_blocks": [{ "node", "input", "block" }] }.
/// Node and channel indices are 1-based in files.
NetworkSpec network_from_json(const Json& j);
Json network_to_json(const NetworkSpec& spec);

Json report_to_json(const Report& rep);
Json mask_to_json(const BoolMat& mask);

Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace dsf

#include "dsf/json_io.hpp"

#include <fstream>

namespace dsf {

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array of rows");
  const auto nrows = static_cast<Index>(j.size());
  if (nrows == 0) return Mat(0, 0);
  if (!j[0].is_array()) throw ValidationError(what + ": rows must be arrays");
  const auto ncols = static_cast<Index>(j[0].size());
  Mat m(nrows, ncols);
  for (Index i = 0; i < nrows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != ncols)
      throw ValidationError(what + ": row " + std::to_string(i) + " has inconsistent length");
    for (Index k = 0; k < ncols; ++k) {
      const auto& cell = row[static_cast<std::size_t>(k)];
      if (!cell.is_number())
        throw ValidationError(what + ": entry (" + std::to_string(i) + "," + std::to_string(k) +
                              ") is not a number");
      m(i, k) = cell.get<double>();
    }
  }
  require_finite(m, what);
  return m;
}

Domain domain_from_json(const Json& j) {
  if (!j.is_string()) throw ValidationError("domain: expected \"continuous\" or \"discrete\"");
  std::string s = j.get<std::string>();
  if (s == "continuous") return Domain::Continuous;
  if (s == "discrete") return Domain::Discrete;
  throw ValidationError("domain: unknown value \"" + s + "\"");
}

namespace {

const Json& need(const Json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(ctx + ": missing field \"" + key + "\"");
  return *it;
}

}  // namespace

NamedSystem system_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("system file: expected a JSON object");
  NamedSystem ns;
  ns.name = j.contains("name") ? j["name"].get<std::string>() : "system";
  ns.sys.domain = domain_from_json(need(j, "domain", "system file"));
  ns.sys.A = mat_from_json(need(j, "A", "system file"), "A");
  ns.sys.B = mat_from_json(need(j, "B", "system file"), "B");
  ns.sys.C = mat_from_json(need(j, "C", "system file"), "C");
  ns.sys.D = mat_from_json(need(j, "D", "system file"), "D");
  ns.sys.validate("system file");
  return ns;
}

Json system_to_json(const NamedSystem& ns) {
  Json j;
  j["name"] = ns.name;
  j["domain"] = to_string(ns.sys.domain);
  j["A"] = mat_to_json(ns.sys.A);
  j["B"] = mat_to_json(ns.sys.B);
  j["C"] = mat_to_json(ns.sys.C);
  j["D"] = mat_to_json(ns.sys.D);
  return j;
}

Mat k_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("K file: expected a JSON object");
  return mat_from_json(need(j, "K", "K file"), "K");
}

Json factors_to_json(const CoprimeFactors& cf, const std::string& name) {
  Json j;
  j["kind"] = "left_coprime_factors";
  j["name"] = name;
  j["domain"] = to_string(cf.domain);
  j["p"] = cf.p;
  j["m"] = cf.m;
  j["A"] = mat_to_json(cf.mn.A);
  j["B"] = mat_to_json(cf.mn.B);
  j["C"] = mat_to_json(cf.mn.C);
  j["D"] = mat_to_json(cf.mn.D);
  return j;
}

CoprimeFactors factors_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("factor file: expected a JSON object");
  if (j.contains("kind") && j["kind"].get<std::string>() != "left_coprime_factors")
    throw ValidationError("factor file: unexpected kind \"" + j["kind"].get<std::string>() + "\"");
  CoprimeFactors cf;
  cf.domain = domain_from_json(need(j, "domain", "factor file"));
  cf.p = need(j, "p", "factor file").get<Index>();
  cf.m = need(j, "m", "factor file").get<Index>();
  cf.mn.domain = cf.domain;
  cf.mn.A = mat_from_json(need(j, "A", "factor file"), "A");
  cf.mn.B = mat_from_json(need(j, "B", "factor file"), "B");
  cf.mn.C = mat_from_json(need(j, "C", "factor file"), "C");
  cf.mn.D = mat_from_json(need(j, "D", "factor file"), "D");
  cf.mn.validate("factor file");
  if (cf.mn.inputs() != cf.p + cf.m || cf.mn.outputs() != cf.p)
    throw ValidationError("factor file: realization shape does not match p and m");
  cf.poles = eigenvalues(cf.mn.A);
  return cf;
}

namespace {

StateSpace block_from_json(const Json& j, Domain d, const std::string& ctx) {
  StateSpace b;
  b.domain = d;
  b.A = mat_from_json(need(j, "A", ctx), ctx + ".A");
  b.B = mat_from_json(need(j, "B", ctx), ctx + ".B");
  b.C = mat_from_json(need(j, "C", ctx), ctx + ".C");
  b.D = mat_from_json(need(j, "D", ctx), ctx + ".D");
  return b;
}

Json block_to_json(const StateSpace& b) {
  Json j;
  j["A"] = mat_to_json(b.A);
  j["B"] = mat_to_json(b.B);
  j["C"] = mat_to_json(b.C);
  j["D"] = mat_to_json(b.D);
  return j;
}

}  // namespace

NetworkSpec network_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("network file: expected a JSON object");
  NetworkSpec spec;
  spec.nodes = need(j, "nodes", "network file").get<Index>();
  spec.inputs = need(j, "inputs", "network file").get<Index>();
  spec.domain = domain_from_json(need(j, "domain", "network file"));
  spec.name = j.contains("name") ? j["name"].get<std::string>() : "network";
  for (const auto& e : need(j, "edges", "network file")) {
    EdgeBlock eb;
    eb.from = need(e, "from", "edge").get<Index>() - 1;  // files are 1-based
    eb.to = need(e, "to", "edge").get<Index>() - 1;
    eb.block = block_from_json(need(e, "block", "edge"), spec.domain, "edge block");
    spec.edges.push_back(std::move(eb));
  }
  for (const auto& e : need(j, "input_blocks", "network file")) {
    InputBlock ib;
    ib.node = need(e, "node", "input block").get<Index>() - 1;
    ib.input = need(e, "input", "input block").get<Index>() - 1;
    ib.block = block_from_json(need(e, "block", "input block"), spec.domain, "input block");
    spec.input_blocks.push_back(std::move(ib));
  }
  spec.validate();
  return spec;
}

Json network_to_json(const NetworkSpec& spec) {
  Json j;
  j["nodes"] = spec.nodes;
  j["inputs"] = spec.inputs;
  j["domain"] = to_string(spec.domain);
  j["name"] = spec.name;
  Json edges = Json::array();
  for (const auto& e : spec.edges) {
    Json je;
    je["from"] = e.from + 1;
    je["to"] = e.to + 1;
    je["block"] = block_to_json(e.block);
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  Json ibs = Json::array();
  for (const auto& ib : spec.input_blocks) {
    Json ji;
    ji["node"] = ib.node + 1;
    ji["input"] = ib.input + 1;
    ji["block"] = block_to_json(ib.block);
    ibs.push_back(std::move(ji));
  }
  j["input_blocks"] = std::move(ibs);
  return j;
}

Json report_to_json(const Report& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    jc["margin"] = c.margin;
    jc["worst_lambda"] = Json::array({c.worst_lambda.real(), c.worst_lambda.imag()});
    if (!c.note.empty()) jc["note"] = c.note;
    checks.push_back(std::move(jc));
  }
  Json j;
  j["checks"] = std::move(checks);
  return j;
}

Json mask_to_json(const BoolMat& mask) {
  Json rows = Json::array();
  for (Index i = 0; i < mask.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < mask.cols(); ++j) row.push_back(mask(i, j) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << contents;
}

}  // namespace dsf

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "dsf/json_io.hpp"

namespace fs = std::filesystem;
using namespace dsf;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 42;
  double tol = 1e-9;
  int samples = 20;
  std::string out = "out";
  bool dot = false;
};

std::string sanitize(const std::string& name) {
  std::string s;
  for (char c : name)
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return s.empty() ? std::string("unnamed") : s;
}

fs::path make_out_dir(const GlobalOpts& g, const std::string& command, const std::string& name) {
  fs::path dir = fs::path(g.out) / command / sanitize(name);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const Json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
}

std::vector<Complex> parse_pole_list(const std::string& text) {
  std::vector<Complex> poles;
  std::string token;
  auto flush = [&]() {
    if (token.empty()) return;
    std::string t = token;
    token.clear();
    // forms: "a", "a+bi", "a-bi" (also accepts j)
    for (char& c : t)
      if (c == 'j') c = 'i';
    std::size_t ipos = t.find('i');
    try {
      if (ipos == std::string::npos) {
        poles.emplace_back(std::stod(t), 0.0);
        return;
      }
      // split at the sign of the imaginary part (skip a leading sign)
      std::size_t split = std::string::npos;
      for (std::size_t k = 1; k < t.size(); ++k)
        if ((t[k] == '+' || t[k] == '-') && (t[k - 1] != 'e' && t[k - 1] != 'E')) split = k;
      if (split == std::string::npos) throw ValidationError("bad pole token: " + t);
      double re = std::stod(t.substr(0, split));
      std::string imtext = t.substr(split, ipos - split);
      double im = (imtext == "+" || imtext == "-") ? (imtext == "-" ? -1.0 : 1.0)
                                                   : std::stod(imtext);
      poles.emplace_back(re, im);
    } catch (const std::invalid_argument&) {
      throw ValidationError("cannot parse pole token: \"" + t + "\"");
    } catch (const std::out_of_range&) {
      throw ValidationError("pole token out of range: \"" + t + "\"");
    }
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      token += c;
    }
  }
  flush();
  return poles;
}

Check identity_check(const std::string& name, const RationalMatrix& lhs, const RationalMatrix& rhs,
                     Rng& rng, int nsamples, double tol = 1e-8) {
  Check c{name, false, 0.0, {0, 0}, ""};
  c.margin = max_relative_error(lhs, rhs, rng, nsamples);
  c.pass = c.margin < tol;
  return c;
}

struct DsfArtifacts {
  ViablePair vp;
  DSFPair dsf;
  Report report;
  BoolMat q_mask, p_mask;
  std::string dot;
};

DsfArtifacts build_dsf(const StateSpace& sys, const Mat* kfile, const GlobalOpts& g, Rng& rng) {
  OutputCanonical oc = to_output_canonical(sys);
  Mat K = kfile ? *kfile : Mat::Zero(oc.part.hidden(), oc.part.p());
  DsfArtifacts art{viable_pair(oc.part, K), {}, {}, {}, {}, {}};
  art.dsf = dsf_from_viable(art.vp);

  RationalMatrix L = RationalMatrix::from_state_space(sys);
  RationalMatrix lhs_wv =
      (RationalMatrix::lambda_identity(art.vp.p()) - art.vp.W).inverse() * art.vp.V;
  art.report.add(identity_check("identity_L_eq_inv(lI-W)V", lhs_wv, L, rng, g.samples));
  Mat ip = Mat::Identity(art.vp.p(), art.vp.p());
  RationalMatrix lhs_qp = (RationalMatrix::constant(ip) - art.dsf.Q).inverse() * art.dsf.P;
  art.report.add(identity_check("identity_L_eq_inv(I-Q)P", lhs_qp, L, rng, g.samples));

  ViabilityReport via = check_viability(art.vp, rng, g.samples);
  art.report.add({"mcmillan_degree_bound", via.degree_ok,
                  static_cast<double>(via.degree_bound - via.degree),
                  {0, 0},
                  "degree " + std::to_string(via.degree) + " of bound " +
                      std::to_string(via.degree_bound)});

  TopologyReport topo = topology_report(art.dsf, rng, g.tol, std::max(10, g.samples));
  art.q_mask = topo.q_mask;
  art.p_mask = topo.p_mask;
  art.dot = topo.dot;
  return art;
}

int finish(const Report& rep) { return rep.all_pass() ? 0 : 1; }

int run_dsf(const std::string& system_path, const std::string& k_path, const GlobalOpts& g) {
  NamedSystem ns = system_from_json(load_json_file(system_path));
  Rng rng(g.seed);
  Mat K;
  const Mat* kptr = nullptr;
  if (!k_path.empty()) {
    K = k_from_json(load_json_file(k_path));
    kptr = &K;
  }
  DsfArtifacts art = build_dsf(ns.sys, kptr, g, rng);

  fs::path dir = make_out_dir(g, "dsf", ns.name);
  Json j = report_to_json(art.report);
  j["q_mask"] = mask_to_json(art.q_mask);
  j["p_mask"] = mask_to_json(art.p_mask);
  write_json(dir / "report.json", j);
  if (g.dot) write_text_file((dir / "topology.dot").string(), art.dot);
  std::cout << dir.string() << "\n";
  return finish(art.report);
}

int run_coprime(const std::string& system_path, const std::string& poles_text,
                const GlobalOpts& g) {
  NamedSystem ns = system_from_json(load_json_file(system_path));
  Rng rng(g.seed);
  OutputCanonical oc = to_output_canonical(ns.sys);
  std::vector<Complex> targets = parse_pole_list(poles_text);
  if (static_cast<Index>(targets.size()) != oc.part.hidden())
    throw ValidationError("expected " + std::to_string(oc.part.hidden()) +
                          " poles for this system, got " + std::to_string(targets.size()));
  for (const auto& z : targets)
    if (!is_stable(z, ns.sys.domain))
      throw ValidationError("requested pole (" + std::to_string(z.real()) + "," +
                            std::to_string(z.imag()) + ") is not stable for the " +
                            to_string(ns.sys.domain) + " domain");

  Mat K = place_pair_poles(oc.part, targets, rng);
  ViablePair vp = viable_pair(oc.part, K);
  CoprimeFactors cf =
      stable_coprime_from_viable(vp, ThetaFactor::defaults(ns.sys.domain, oc.part.p()));

  Report rep = coprimeness_certificate(vp, rng, std::max(30, g.samples));
  rep.add(identity_check("identity_L_eq_invM_N", cf.transfer(),
                         RationalMatrix::from_state_space(ns.sys), rng, g.samples));

  fs::path dir = make_out_dir(g, "coprime", ns.name);
  write_json(dir / "factors.json", factors_to_json(cf, ns.name));
  write_json(dir / "report.json", report_to_json(rep));
  std::cout << dir.string() << "\n";
  return finish(rep);
}

int run_recover(const std::string& mn_path, const GlobalOpts& g) {
  Json jin = load_json_file(mn_path);
  CoprimeFactors cf = factors_from_json(jin);
  std::string name = jin.contains("name") ? jin["name"].get<std::string>() : "factors";
  Rng rng(g.seed);

  RecoveredPair rec = recover_viable(cf, rng);
  DSFPair dsf = dsf_from_viable(rec.vp);

  Report rep;
  rep.add({"riccati_residual", true, rec.riccati.residual,
           {0, 0},
           "alternatives seen: " + std::to_string(rec.riccati.alternatives)});
  rep.add({"roundtrip_match", rec.roundtrip_error < 1e-6, rec.roundtrip_error,
           {0, 0},
           "rebuilt [M N] vs input"});
  rep.add(identity_check(
      "identity_invM_N_eq_inv(lI-W)V",
      (RationalMatrix::lambda_identity(rec.vp.p()) - rec.vp.W).inverse() * rec.vp.V,
      cf.transfer(), rng, g.samples));

  fs::path dir = make_out_dir(g, "recover", name);
  Json jrec;
  jrec["kind"] = "recovered_viable_pair";
  jrec["domain"] = to_string(cf.domain);
  jrec["K"] = mat_to_json(rec.vp.K);
  jrec["Ax"] = mat_to_json(rec.Ax);
  jrec["W"] = {{"A", mat_to_json(rec.vp.w_ss.A)},
               {"B", mat_to_json(rec.vp.w_ss.B)},
               {"C", mat_to_json(rec.vp.w_ss.C)},
               {"D", mat_to_json(rec.vp.w_ss.D)}};
  jrec["V"] = {{"A", mat_to_json(rec.vp.v_ss.A)},
               {"B", mat_to_json(rec.vp.v_ss.B)},
               {"C", mat_to_json(rec.vp.v_ss.C)},
               {"D", mat_to_json(rec.vp.v_ss.D)}};
  Rng mask_rng(g.seed + 1);
  TopologyReport topo = topology_report(dsf, mask_rng, g.tol, std::max(10, g.samples));
  jrec["q_mask"] = mask_to_json(topo.q_mask);
  jrec["p_mask"] = mask_to_json(topo.p_mask);
  write_json(dir / "recovered.json", jrec);
  write_json(dir / "report.json", report_to_json(rep));
  if (g.dot) write_text_file((dir / "topology.dot").string(), topo.dot);
  std::cout << dir.string() << "\n";
  return finish(rep);
}

int run_demo(const std::string& which, const GlobalOpts& g) {
  NetworkSpec spec;
  if (which == "ring") {
    spec = demo_ring();
  } else if (which == "line") {
    spec = demo_line();
  } else if (which.size() > 5 && which.substr(which.size() - 5) == ".json") {
    spec = network_from_json(load_json_file(which));
  } else {
    throw ValidationError("unknown demo \"" + which +
                          "\" (expected ring, line, or a network .json file)");
  }
  Rng rng(g.seed);

  fs::path dir = make_out_dir(g, "demo", spec.name);
  write_json(dir / "network.json", network_to_json(spec));

  ComposeResult res = compose(spec);
  write_json(dir / "system.json", system_to_json({spec.name, res.sys}));

  OutputCanonical oc = to_output_canonical(res.sys);
  ViablePair vp = viable_pair(oc.part, Mat::Zero(oc.part.hidden(), oc.part.p()));
  DSFPair dsf = dsf_from_viable(vp);
  CoprimeFactors cf =
      stable_coprime_from_viable(vp, ThetaFactor::defaults(spec.domain, oc.part.p()));
  write_json(dir / "factors.json", factors_to_json(cf, spec.name));

  RecoveredPair rec = recover_viable(cf, rng);

  Report rep = identity_suite(res.sys, vp, dsf, cf, rng, g.samples);
  for (auto& c : coprimeness_certificate(vp, rng, std::max(30, g.samples)).checks)
    rep.add(std::move(c));
  rep.add({"roundtrip_match", rec.roundtrip_error < 1e-6, rec.roundtrip_error,
           {0, 0},
           "recover_viable vs forward factors"});
  rep.add({"riccati_residual", true, rec.riccati.residual, {0, 0}, ""});

  TopologyReport topo = topology_report(dsf, rng, g.tol, std::max(30, g.samples));
  Json j = report_to_json(rep);
  j["q_mask"] = mask_to_json(topo.q_mask);
  j["p_mask"] = mask_to_json(topo.p_mask);
  write_json(dir / "report.json", j);
  write_text_file((dir / "topology.dot").string(), topo.dot);
  std::cout << dir.string() << "\n";
  return finish(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-revealing factorizations of LTI systems: DSF (Q,P), viable (W,V) "
               "pairs, stable left coprime factors, and their inverse recovery"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "seed for all sampling and retries")->capture_default_str();
  app.add_option("--tol", g.tol, "relative zero-detection tolerance for sparsity masks")
      ->capture_default_str();
  app.add_option("--samples", g.samples, "number of evaluation sample points")
      ->capture_default_str();
  app.add_option("--out", g.out, "output directory root")->capture_default_str();
  app.add_flag("--dot", g.dot, "also write DOT topology files");

  std::string system_path, k_path, poles_text, mn_path, demo_name;

  CLI::App* cmd_dsf = app.add_subcommand("dsf", "compute the canonical (or K-shifted) DSF");
  cmd_dsf->add_option("system", system_path, "system JSON file")->required();
  cmd_dsf->add_option("--k-file", k_path, "JSON file with the free parameter K");

  CLI::App* cmd_coprime =
      app.add_subcommand("coprime", "stable left coprime factors with placed pair poles");
  cmd_coprime->add_option("system", system_path, "system JSON file")->required();
  cmd_coprime->add_option("--poles", poles_text, "comma-separated stable pole list")->required();

  CLI::App* cmd_recover =
      app.add_subcommand("recover", "recover the viable pair and DSF from factors");
  cmd_recover->add_option("factors", mn_path, "factor JSON file")->required();

  CLI::App* cmd_demo = app.add_subcommand("demo", "run the full pipeline on a network");
  cmd_demo->add_option("which", demo_name, "ring, line, or a network JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_dsf->parsed()) return run_dsf(system_path, k_path, g);
    if (cmd_coprime->parsed()) return run_coprime(system_path, poles_text, g);
    if (cmd_recover->parsed()) return run_recover(mn_path, g);
    if (cmd_demo->parsed()) return run_demo(demo_name, g);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

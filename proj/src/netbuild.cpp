#include "dsf/netbuild.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/LU>

namespace dsf {

namespace {

void validate_block(const StateSpace& b, const std::string& what) {
  b.validate(what);
  if (b.inputs() != 1 || b.outputs() != 1)
    throw ValidationError(what + " must be SISO (node signals are scalar)");
  if (!b.strictly_proper(0.0))
    throw ValidationError(what + " must be strictly proper (D = 0)");
}

}  // namespace

void NetworkSpec::validate() const {
  if (nodes <= 0) throw ValidationError("network needs at least one node");
  if (inputs < 0) throw ValidationError("negative input count");
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= nodes || e.to < 0 || e.to >= nodes)
      throw ValidationError("edge endpoint out of range");
    if (e.from == e.to)
      throw ValidationError("self loop on node " + std::to_string(e.to + 1) +
                            " (Q has zero diagonal by construction)");
    validate_block(e.block, "edge block y" + std::to_string(e.from + 1) + " -> y" +
                                std::to_string(e.to + 1));
    if (e.block.domain != domain) throw ValidationError("edge block domain mismatch");
  }
  for (const auto& ib : input_blocks) {
    if (ib.node < 0 || ib.node >= nodes) throw ValidationError("input block node out of range");
    if (ib.input < 0 || ib.input >= inputs)
      throw ValidationError("input block channel out of range");
    validate_block(ib.block, "input block u" + std::to_string(ib.input + 1) + " -> y" +
                                 std::to_string(ib.node + 1));
    if (ib.block.domain != domain) throw ValidationError("input block domain mismatch");
  }
  std::vector<bool> fed(static_cast<std::size_t>(nodes), false);
  for (const auto& e : edges) fed[static_cast<std::size_t>(e.to)] = true;
  for (const auto& ib : input_blocks) fed[static_cast<std::size_t>(ib.node)] = true;
  for (Index i = 0; i < nodes; ++i)
    if (!fed[static_cast<std::size_t>(i)])
      throw ValidationError("node y" + std::to_string(i + 1) +
                            " has no feeding block; its output map row would vanish");
}

RationalMatrix NetworkSpec::q_tfm() const {
  RationalMatrix acc = RationalMatrix::constant(Mat::Zero(nodes, nodes));
  for (const auto& e : edges)
    acc = acc + RationalMatrix::embed(RationalMatrix::from_state_space(e.block), e.to, e.from,
                                      nodes, nodes);
  return acc;
}

RationalMatrix NetworkSpec::p_tfm() const {
  RationalMatrix acc = RationalMatrix::constant(Mat::Zero(nodes, inputs));
  for (const auto& ib : input_blocks)
    acc = acc + RationalMatrix::embed(RationalMatrix::from_state_space(ib.block), ib.node,
                                      ib.input, nodes, inputs);
  return acc;
}

ComposeResult compose(const NetworkSpec& spec_in) {
  spec_in.validate();
  NetworkSpec spec = spec_in;
  std::stable_sort(spec.edges.begin(), spec.edges.end(), [](const EdgeBlock& a, const EdgeBlock& b) {
    return std::make_pair(a.to, a.from) < std::make_pair(b.to, b.from);
  });
  std::stable_sort(spec.input_blocks.begin(), spec.input_blocks.end(),
                   [](const InputBlock& a, const InputBlock& b) {
                     return std::make_pair(a.node, a.input) < std::make_pair(b.node, b.input);
                   });

  // Loop well-posedness: I - Q(lambda) invertible as a rational matrix.
  // Strictly proper blocks guarantee this at infinity; verify at one finite
  // point for the error path.
  {
    RationalMatrix q = spec.q_tfm();
    bool ok = false;
    for (int k = 0; k < 4 && !ok; ++k) {
      Complex lam(1.618 + 0.77 * k, 0.911 + 0.31 * k);
      try {
        CMat v = CMat::Identity(spec.nodes, spec.nodes) - q.eval(lam);
        ok = Eigen::PartialPivLU<CMat>(v).rcond() > 1e-12;
      } catch (const PoleError&) {
      }
    }
    if (!ok) throw NumericalError("network loop is ill posed: det(I - Q(lambda)) vanishes");
  }

  struct Placed {
    const StateSpace* block;
    Index state0;
    Index feeds;          // node whose signal this block contributes to
    Index src_node = -1;  // for edges
    Index src_input = -1; // for input blocks
  };
  std::vector<Placed> placed;
  Index n = 0;
  for (const auto& e : spec.edges) {
    placed.push_back({&e.block, n, e.to, e.from, -1});
    n += e.block.order();
  }
  for (const auto& ib : spec.input_blocks) {
    placed.push_back({&ib.block, n, ib.node, -1, ib.input});
    n += ib.block.order();
  }

  const Index p = spec.nodes, m = spec.inputs;
  Mat Craw = Mat::Zero(p, n);
  for (const auto& pl : placed)
    Craw.block(pl.feeds, pl.state0, 1, pl.block->order()) = pl.block->C;

  Mat Araw = Mat::Zero(n, n);
  Mat Braw = Mat::Zero(n, m);
  for (const auto& pl : placed) {
    const Index nb = pl.block->order();
    Araw.block(pl.state0, pl.state0, nb, nb) = pl.block->A;
    if (pl.src_node >= 0) {
      // edge input is the source node signal, itself a state combination
      Araw.block(pl.state0, 0, nb, n) += pl.block->B * Craw.row(pl.src_node);
    } else {
      Braw.block(pl.state0, pl.src_input, nb, 1) = pl.block->B;
    }
  }

  if (numerical_rank(Craw) < p)
    throw ValidationError("aggregate output map is rank deficient; node signals are dependent");

  Mat T = output_canonical_transform(Craw);
  Eigen::PartialPivLU<Mat> lu(T);
  Mat Tinv = lu.solve(Mat::Identity(n, n));

  ComposeResult out;
  out.T = T;
  out.sys.A = T * Araw * Tinv;
  out.sys.B = T * Braw;
  out.sys.C = Mat::Zero(p, n);
  out.sys.C.leftCols(p) = Mat::Identity(p, p);
  out.sys.D = Mat::Zero(p, m);
  out.sys.domain = spec.domain;
  return out;
}

TopologyReport topology_report(const DSFPair& dsf, Rng& rng, double tol_rel, int nsamples) {
  TopologyReport rep;
  rep.q_mask = sparsity_of(dsf.Q, tol_rel, nsamples, rng).mask;
  rep.p_mask = sparsity_of(dsf.P, tol_rel, nsamples, rng).mask;

  std::ostringstream os;
  os << "digraph topology {\n  rankdir=LR;\n";
  for (Index i = 0; i < rep.q_mask.rows(); ++i) os << "  y" << (i + 1) << ";\n";
  for (Index j = 0; j < rep.p_mask.cols(); ++j) {
    bool used = false;
    for (Index i = 0; i < rep.p_mask.rows(); ++i) used = used || rep.p_mask(i, j);
    if (used) os << "  u" << (j + 1) << " [shape=box];\n";
  }
  for (Index j = 0; j < rep.q_mask.cols(); ++j)
    for (Index i = 0; i < rep.q_mask.rows(); ++i)
      if (rep.q_mask(i, j)) os << "  y" << (j + 1) << " -> y" << (i + 1) << ";\n";
  for (Index j = 0; j < rep.p_mask.cols(); ++j)
    for (Index i = 0; i < rep.p_mask.rows(); ++i)
      if (rep.p_mask(i, j)) os << "  u" << (j + 1) << " -> y" << (i + 1) << ";\n";
  os << "}\n";
  rep.dot = os.str();
  return rep;
}

namespace {

StateSpace first_order_lag(double pole_mag, Domain d) {
  StateSpace b;
  b.A = Mat::Constant(1, 1, -pole_mag);
  b.B = Mat::Constant(1, 1, 1.0);
  b.C = Mat::Constant(1, 1, 1.0);
  b.D = Mat::Zero(1, 1);
  b.domain = d;
  return b;
}

}  // namespace

NetworkSpec demo_ring() {
  NetworkSpec spec;
  spec.nodes = 3;
  spec.inputs = 3;
  spec.name = "ring";
  StateSpace q = first_order_lag(1.0, spec.domain);
  StateSpace pb = first_order_lag(2.0, spec.domain);
  spec.edges = {{2, 0, q}, {0, 1, q}, {1, 2, q}};  // y3->y1, y1->y2, y2->y3
  spec.input_blocks = {{0, 0, pb}, {1, 1, pb}, {2, 2, pb}};
  return spec;
}

NetworkSpec demo_line() {
  NetworkSpec spec = demo_ring();
  spec.name = "line";
  // break the ring: drop the closing edge y3 -> y1
  spec.edges.erase(spec.edges.begin());
  return spec;
}

}  // namespace dsf

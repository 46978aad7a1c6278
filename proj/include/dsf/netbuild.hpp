#pragma once

#include "dsf/structure.hpp"

namespace dsf {

/// One signal-flow edge y_from -> y_to carrying a strictly proper SISO block.
struct EdgeBlock {
  Index from = 0, to = 0;
  StateSpace block;
};

/// Input channel u_input feeding node y_node through a strictly proper SISO
/// block.
struct InputBlock {
  Index node = 0, input = 0;
  StateSpace block;
};

/// Block-diagram LTI network: p scalar node signals, m scalar inputs,
/// strictly proper blocks on edges and input channels, no self loops.
struct NetworkSpec {
  Index nodes = 0, inputs = 0;
  std::vector<EdgeBlock> edges;
  std::vector<InputBlock> input_blocks;
  Domain domain = Domain::Continuous;
  std::string name = "network";

  void validate() const;
  /// Block TFMs of the declared diagram: Q_spec (p x p, zero diagonal) and
  /// P_spec (p x m).
  RationalMatrix q_tfm() const;
  RationalMatrix p_tfm() const;
};

struct ComposeResult {
  StateSpace sys;  // output-canonical: the node signals are the first p states
  Mat T;           // transform from the raw block-stacked coordinates
};

/// Aggregates the diagram into one realization. Strictly proper blocks make
/// every node signal a combination of block states, so after the canonical
/// transform the node signals are literally the leading states and the
/// canonical K = 0 DSF reads the declared adjacency back off.
ComposeResult compose(const NetworkSpec& spec);

struct TopologyReport {
  BoolMat q_mask;  // q_mask(i,j): edge y_j -> y_i
  BoolMat p_mask;  // p_mask(i,j): input u_j -> y_i
  std::string dot;
};

/// Reads the graph off the DSF sparsity. DOT output is deterministic
/// (node order sorted).
TopologyReport topology_report(const DSFPair& dsf, Rng& rng, double tol_rel = 1e-9,
                               int nsamples = 30);

/// The two demo diagrams: a 3-node directed ring (y1->y2->y3->y1) and the
/// line obtained by removing the closing edge.
NetworkSpec demo_ring();
NetworkSpec demo_line();

}  // namespace dsf

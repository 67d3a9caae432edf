#pragma once

#include <cstdint>
#include <vector>

namespace flatflow {

/// Boykov-Kolmogorov augmenting-path max-flow on a graph with real
/// capacities. After solve(), in_source_set() reports the minimal source side
/// of a minimum cut: nodes reachable from the source in the residual graph.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes = 0);

  void reset(int nodes);
  int node_count() const { return static_cast<int>(nodes_.size()); }

  /// Adds terminal capacities source -> node and node -> sink (accumulates).
  void add_terminal(int node, double from_source, double to_sink);

  /// Adds arc u -> v with capacity cap_uv and arc v -> u with capacity cap_vu.
  void add_edge(int u, int v, double cap_uv, double cap_vu);

  /// Returns the max-flow value.
  double solve();

  bool in_source_set(int node) const { return source_set_[node] != 0; }

 private:
  struct Node {
    int first = -1;
    int parent = -1;  // arc to parent, or kTerminal / kOrphan / kFree
    int next_active = -1;
    int ts = 0;
    int dist = 0;
    bool sink = false;
    bool active = false;
    double tr = 0.0;  // > 0: residual from source, < 0: residual to sink
  };
  struct Arc {
    int head;
    int next;
    double cap;
  };

  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;
  static constexpr int kFree = -1;

  void activate(int i);
  int next_active();
  void augment(int mid);
  void adopt_source(int i);
  void adopt_sink(int i);
  void mark_source_set();

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<int> orphans_;
  std::vector<std::uint8_t> source_set_;
  int queue_head_ = -1;
  int queue_tail_ = -1;
  int time_ = 0;
  double flow_ = 0.0;
};

}  // namespace flatflow

#include "flatflow/maxflow.hpp"

#include <algorithm>
#include <limits>

namespace flatflow {

MaxFlow::MaxFlow(int nodes) { reset(nodes); }

void MaxFlow::reset(int nodes) {
  nodes_.assign(nodes, Node{});
  arcs_.clear();
  orphans_.clear();
  source_set_.assign(nodes, 0);
  queue_head_ = queue_tail_ = -1;
  time_ = 0;
  flow_ = 0.0;
}

void MaxFlow::add_terminal(int node, double from_source, double to_sink) {
  Node& n = nodes_[node];
  if (n.tr > 0) {
    from_source += n.tr;
  } else {
    to_sink -= n.tr;
  }
  flow_ += std::min(from_source, to_sink);
  n.tr = from_source - to_sink;
}

void MaxFlow::add_edge(int u, int v, double cap_uv, double cap_vu) {
  const int a = static_cast<int>(arcs_.size());
  arcs_.push_back({v, nodes_[u].first, cap_uv});
  nodes_[u].first = a;
  arcs_.push_back({u, nodes_[v].first, cap_vu});
  nodes_[v].first = a + 1;
}

void MaxFlow::activate(int i) {
  Node& n = nodes_[i];
  if (n.active) return;
  n.active = true;
  n.next_active = -1;
  if (queue_tail_ < 0) {
    queue_head_ = i;
  } else {
    nodes_[queue_tail_].next_active = i;
  }
  queue_tail_ = i;
}

int MaxFlow::next_active() {
  while (queue_head_ >= 0) {
    const int i = queue_head_;
    queue_head_ = nodes_[i].next_active;
    if (queue_head_ < 0) queue_tail_ = -1;
    nodes_[i].active = false;
    if (nodes_[i].parent != kFree) return i;
  }
  return -1;
}

void MaxFlow::augment(int mid) {
  double bottleneck = arcs_[mid].cap;
  int i = arcs_[mid ^ 1].head;
  for (int a; (a = nodes_[i].parent) != kTerminal; i = arcs_[a].head) {
    bottleneck = std::min(bottleneck, arcs_[a ^ 1].cap);
  }
  bottleneck = std::min(bottleneck, nodes_[i].tr);
  i = arcs_[mid].head;
  for (int a; (a = nodes_[i].parent) != kTerminal; i = arcs_[a].head) {
    bottleneck = std::min(bottleneck, arcs_[a].cap);
  }
  bottleneck = std::min(bottleneck, -nodes_[i].tr);

  arcs_[mid ^ 1].cap += bottleneck;
  arcs_[mid].cap -= bottleneck;

  auto orphan = [&](int node) {
    nodes_[node].parent = kOrphan;
    orphans_.push_back(node);
  };
  i = arcs_[mid ^ 1].head;
  for (int a; (a = nodes_[i].parent) != kTerminal; i = arcs_[a].head) {
    arcs_[a].cap += bottleneck;
    arcs_[a ^ 1].cap -= bottleneck;
    if (arcs_[a ^ 1].cap <= 0) orphan(i);
  }
  nodes_[i].tr -= bottleneck;
  if (nodes_[i].tr <= 0) orphan(i);

  i = arcs_[mid].head;
  for (int a; (a = nodes_[i].parent) != kTerminal; i = arcs_[a].head) {
    arcs_[a ^ 1].cap += bottleneck;
    arcs_[a].cap -= bottleneck;
    if (arcs_[a].cap <= 0) orphan(i);
  }
  nodes_[i].tr += bottleneck;
  if (nodes_[i].tr >= 0) orphan(i);

  flow_ += bottleneck;
}

void MaxFlow::adopt_source(int i) {
  constexpr int kInfDist = std::numeric_limits<int>::max();
  int best_arc = kFree;
  int best_d = kInfDist;
  for (int a0 = nodes_[i].first; a0 >= 0; a0 = arcs_[a0].next) {
    if (arcs_[a0 ^ 1].cap <= 0) continue;
    int j = arcs_[a0].head;
    if (nodes_[j].sink || nodes_[j].parent == kFree) continue;
    int d = 0;
    for (;;) {
      if (nodes_[j].ts == time_) {
        d += nodes_[j].dist;
        break;
      }
      const int a = nodes_[j].parent;
      ++d;
      if (a == kTerminal) {
        nodes_[j].ts = time_;
        nodes_[j].dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInfDist;
        break;
      }
      j = arcs_[a].head;
    }
    if (d < kInfDist) {
      if (d < best_d) {
        best_arc = a0;
        best_d = d;
      }
      for (j = arcs_[a0].head; nodes_[j].ts != time_; j = arcs_[nodes_[j].parent].head) {
        nodes_[j].ts = time_;
        nodes_[j].dist = d--;
      }
    }
  }
  nodes_[i].parent = best_arc;
  if (best_arc != kFree) {
    nodes_[i].ts = time_;
    nodes_[i].dist = best_d + 1;
    return;
  }
  for (int a0 = nodes_[i].first; a0 >= 0; a0 = arcs_[a0].next) {
    const int j = arcs_[a0].head;
    const int a = nodes_[j].parent;
    if (nodes_[j].sink || a == kFree) continue;
    if (arcs_[a0 ^ 1].cap > 0) activate(j);
    if (a != kTerminal && a != kOrphan && arcs_[a].head == i) {
      nodes_[j].parent = kOrphan;
      orphans_.push_back(j);
    }
  }
}

void MaxFlow::adopt_sink(int i) {
  constexpr int kInfDist = std::numeric_limits<int>::max();
  int best_arc = kFree;
  int best_d = kInfDist;
  for (int a0 = nodes_[i].first; a0 >= 0; a0 = arcs_[a0].next) {
    if (arcs_[a0].cap <= 0) continue;
    int j = arcs_[a0].head;
    if (!nodes_[j].sink || nodes_[j].parent == kFree) continue;
    int d = 0;
    for (;;) {
      if (nodes_[j].ts == time_) {
        d += nodes_[j].dist;
        break;
      }
      const int a = nodes_[j].parent;
      ++d;
      if (a == kTerminal) {
        nodes_[j].ts = time_;
        nodes_[j].dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInfDist;
        break;
      }
      j = arcs_[a].head;
    }
    if (d < kInfDist) {
      if (d < best_d) {
        best_arc = a0;
        best_d = d;
      }
      for (j = arcs_[a0].head; nodes_[j].ts != time_; j = arcs_[nodes_[j].parent].head) {
        nodes_[j].ts = time_;
        nodes_[j].dist = d--;
      }
    }
  }
  nodes_[i].parent = best_arc;
  if (best_arc != kFree) {
    nodes_[i].ts = time_;
    nodes_[i].dist = best_d + 1;
    return;
  }
  for (int a0 = nodes_[i].first; a0 >= 0; a0 = arcs_[a0].next) {
    const int j = arcs_[a0].head;
    const int a = nodes_[j].parent;
    if (!nodes_[j].sink || a == kFree) continue;
    if (arcs_[a0].cap > 0) activate(j);
    if (a != kTerminal && a != kOrphan && arcs_[a].head == i) {
      nodes_[j].parent = kOrphan;
      orphans_.push_back(j);
    }
  }
}

double MaxFlow::solve() {
  const int n = node_count();
  for (int i = 0; i < n; ++i) {
    Node& nd = nodes_[i];
    nd.next_active = -1;
    nd.active = false;
    nd.ts = 0;
    if (nd.tr > 0) {
      nd.sink = false;
      nd.parent = kTerminal;
      nd.dist = 1;
      activate(i);
    } else if (nd.tr < 0) {
      nd.sink = true;
      nd.parent = kTerminal;
      nd.dist = 1;
      activate(i);
    } else {
      nd.parent = kFree;
    }
  }

  int current = -1;
  for (;;) {
    int i = current;
    if (i >= 0 && nodes_[i].parent == kFree) i = -1;
    if (i < 0) {
      i = next_active();
      if (i < 0) break;
    }

    int mid = -1;
    if (!nodes_[i].sink) {
      for (int a = nodes_[i].first; a >= 0; a = arcs_[a].next) {
        if (arcs_[a].cap <= 0) continue;
        const int j = arcs_[a].head;
        Node& nj = nodes_[j];
        if (nj.parent == kFree) {
          nj.sink = false;
          nj.parent = a ^ 1;
          nj.ts = nodes_[i].ts;
          nj.dist = nodes_[i].dist + 1;
          activate(j);
        } else if (nj.sink) {
          mid = a;
          break;
        } else if (nj.ts <= nodes_[i].ts && nj.dist > nodes_[i].dist) {
          nj.parent = a ^ 1;
          nj.ts = nodes_[i].ts;
          nj.dist = nodes_[i].dist + 1;
        }
      }
    } else {
      for (int a = nodes_[i].first; a >= 0; a = arcs_[a].next) {
        if (arcs_[a ^ 1].cap <= 0) continue;
        const int j = arcs_[a].head;
        Node& nj = nodes_[j];
        if (nj.parent == kFree) {
          nj.sink = true;
          nj.parent = a ^ 1;
          nj.ts = nodes_[i].ts;
          nj.dist = nodes_[i].dist + 1;
          activate(j);
        } else if (!nj.sink) {
          mid = a ^ 1;
          break;
        } else if (nj.ts <= nodes_[i].ts && nj.dist > nodes_[i].dist) {
          nj.parent = a ^ 1;
          nj.ts = nodes_[i].ts;
          nj.dist = nodes_[i].dist + 1;
        }
      }
    }

    ++time_;
    if (mid >= 0) {
      current = i;
      augment(mid);
      for (std::size_t k = 0; k < orphans_.size(); ++k) {
        const int o = orphans_[k];
        if (nodes_[o].sink) {
          adopt_sink(o);
        } else {
          adopt_source(o);
        }
      }
      orphans_.clear();
    } else {
      current = -1;
    }
  }
  mark_source_set();
  return flow_;
}

void MaxFlow::mark_source_set() {
  const int n = node_count();
  source_set_.assign(n, 0);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (nodes_[i].tr > 0) {
      source_set_[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int a = nodes_[i].first; a >= 0; a = arcs_[a].next) {
      const int j = arcs_[a].head;
      if (arcs_[a].cap > 0 && !source_set_[j]) {
        source_set_[j] = 1;
        stack.push_back(j);
      }
    }
  }
}

}  // namespace flatflow

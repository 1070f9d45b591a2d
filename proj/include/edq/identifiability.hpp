#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace edq {

// Directed graph over named processes: observed nodes plus unobserved nodes
// U_1..U_K listed in elimination order. Self-loops are implicit and excluded.
struct LocalIndependenceGraph {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;  // (from, to)
  std::vector<std::string> unobserved_order;

  void validate() const;
  bool has_edge(const std::string& from, const std::string& to) const;
  std::vector<std::string> parents(const std::string& v) const;
  std::vector<std::string> children(const std::string& v) const;
  // v plus everything reachable from v along directed edges.
  std::set<std::string> descendants(const std::string& v) const;
};

// A trail is a sequence of distinct vertices; step i uses the edge
// (v_i -> v_{i+1}) or (v_{i+1} -> v_i), recorded as forward/backward.
struct Trail {
  std::vector<std::string> vertices;
  std::vector<bool> forward;  // forward[i]: edge points v_i -> v_{i+1}
};

// All simple trails from `from` to `to` whose final edge points into `to`.
std::vector<Trail> enumerate_allowed_trails(const LocalIndependenceGraph& g,
                                            const std::string& from, const std::string& to);

// Blocking: some interior vertex is a non-collider in C, or a collider whose
// descendant set (itself included) is disjoint from C.
bool is_blocked(const LocalIndependenceGraph& g, const Trail& trail,
                const std::set<std::string>& conditioning);

// A is delta-separated from u by C when, for every a in A, every allowed
// trail from a into u is blocked by {u} union C.
bool delta_separated(const LocalIndependenceGraph& g, const std::set<std::string>& A,
                     const std::string& u, const std::set<std::string>& C);

struct EliminabilityWitness {
  std::string unobserved;       // U_k under test
  int bullet = 0;               // 1 or 2, the condition that decided
  bool satisfied = false;
  std::set<std::string> separated_set;     // A of the failing/succeeding check
  std::set<std::string> conditioning_set;  // C as assembled from the definition
  std::vector<Trail> failing_trails;       // unblocked allowed trails, if any
};

struct EliminabilityReport {
  bool eliminable = false;
  std::vector<EliminabilityWitness> witnesses;
};

// Checks, for each U_k in the declared order, that either
//   bullet 1: {N^x, N^y} plus the later unobserved nodes are delta-separated
//             from U_k given the remaining observed/unobserved context, or
//   bullet 2: {N^a} is delta-separated from U_k given that context.
// Conditioning sets are assembled from {N^x, N^y, N^a} plus U_{k+1..K}, minus
// the node whose local independence is being tested.
EliminabilityReport check_eliminability(const LocalIndependenceGraph& g);

// The running three-observed-node graph shapes used throughout the tests.
LocalIndependenceGraph eliminable_example_graph();       // two U's, eliminable
LocalIndependenceGraph confounded_example_graph();       // single U -> {N^a, N^y}

}  // namespace edq

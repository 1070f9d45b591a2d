#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "edq/identifiability.hpp"
#include "edq/rng.hpp"

using namespace edq;

namespace {

LocalIndependenceGraph make_graph(std::vector<std::string> nodes,
                                  std::vector<std::pair<std::string, std::string>> edges,
                                  std::vector<std::string> unobserved = {}) {
  LocalIndependenceGraph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(edges);
  g.unobserved_order = std::move(unobserved);
  return g;
}

// Independent reference implementation: adjacency-matrix recursion over simple
// vertex paths, tracking the orientation of each step, with blocking evaluated
// inline. Written without reusing any library trail machinery.
struct Reference {
  std::vector<std::string> names;
  std::vector<std::vector<bool>> adj;  // adj[i][j]: edge i -> j

  explicit Reference(const LocalIndependenceGraph& g) : names(g.nodes) {
    const std::size_t n = names.size();
    adj.assign(n, std::vector<bool>(n, false));
    for (const auto& [from, to] : g.edges) adj[index(from)][index(to)] = true;
  }

  std::size_t index(const std::string& v) const {
    return static_cast<std::size_t>(
        std::find(names.begin(), names.end(), v) - names.begin());
  }

  std::set<std::size_t> descendants(std::size_t v) const {
    std::set<std::size_t> out{v};
    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < adj.size(); ++j)
        if (adj[cur][j] && out.insert(j).second) stack.push_back(j);
    }
    return out;
  }

  // Counts (or detects unblocked) directed-into-target simple trails.
  struct Walk {
    std::vector<std::size_t> verts;
    std::vector<bool> fwd;
  };

  void all_trails(std::size_t from, std::size_t to, std::vector<Walk>& out) const {
    Walk w;
    w.verts.push_back(from);
    extend(w, to, out);
  }

  void extend(Walk& w, std::size_t to, std::vector<Walk>& out) const {
    const std::size_t head = w.verts.back();
    for (std::size_t next = 0; next < adj.size(); ++next) {
      if (std::find(w.verts.begin(), w.verts.end(), next) != w.verts.end()) continue;
      for (bool fwd : {true, false}) {
        const bool exists = fwd ? adj[head][next] : adj[next][head];
        if (!exists) continue;
        if (next == to && !fwd) continue;
        w.verts.push_back(next);
        w.fwd.push_back(fwd);
        if (next == to)
          out.push_back(w);
        else
          extend(w, to, out);
        w.verts.pop_back();
        w.fwd.pop_back();
      }
    }
  }

  bool blocked(const Walk& w, const std::set<std::size_t>& cond) const {
    for (std::size_t j = 1; j + 1 < w.verts.size(); ++j) {
      const bool collider = w.fwd[j - 1] && !w.fwd[j];
      if (!collider) {
        if (cond.count(w.verts[j])) return true;
      } else {
        bool hit = false;
        for (std::size_t d : descendants(w.verts[j]))
          if (cond.count(d)) {
            hit = true;
            break;
          }
        if (!hit) return true;
      }
    }
    return false;
  }

  bool separated(const std::set<std::string>& A, const std::string& u,
                 const std::set<std::string>& C) const {
    std::set<std::size_t> cond;
    for (const std::string& c : C) cond.insert(index(c));
    cond.insert(index(u));
    for (const std::string& a : A) {
      std::vector<Walk> trails;
      all_trails(index(u), index(a), trails);
      for (const Walk& w : trails)
        if (!blocked(w, cond)) return false;
    }
    return true;
  }

  bool eliminable(const LocalIndependenceGraph& g) const {
    for (std::size_t k = 0; k < g.unobserved_order.size(); ++k) {
      const std::string& uk = g.unobserved_order[k];
      std::set<std::string> later(g.unobserved_order.begin() + static_cast<std::ptrdiff_t>(k) + 1,
                                  g.unobserved_order.end());
      auto holds = [&](std::set<std::string> A) {
        for (const std::string& a : A) {
          std::set<std::string> cond{"N^x", "N^y", "N^a"};
          cond.insert(later.begin(), later.end());
          cond.erase(a);
          if (!separated({a}, uk, cond)) return false;
        }
        return true;
      };
      std::set<std::string> a1{"N^x", "N^y"};
      a1.insert(later.begin(), later.end());
      if (!holds(a1) && !holds({"N^a"})) return false;
    }
    return true;
  }
};

}  // namespace

TEST_CASE("a single directed edge is the only trail between two nodes") {
  const auto g = make_graph({"N^x", "N^y", "N^a"}, {{"N^x", "N^y"}});
  const auto trails = enumerate_allowed_trails(g, "N^x", "N^y");
  REQUIRE(trails.size() == 1);
  CHECK(trails[0].vertices == std::vector<std::string>{"N^x", "N^y"});
  CHECK(trails[0].forward == std::vector<bool>{true});
  // No trail ends against the final edge's direction.
  CHECK(enumerate_allowed_trails(g, "N^y", "N^x").empty());
  CHECK_THROWS((void)enumerate_allowed_trails(g, "N^x", "N^x"));
}

TEST_CASE("both orientations of a two-cycle are distinct trails") {
  const auto g = make_graph({"N^x", "N^y", "N^a"}, {{"N^x", "N^y"}, {"N^y", "N^x"}});
  // Direct forward edge only: traversing y -> x backwards would end backwards.
  CHECK(enumerate_allowed_trails(g, "N^x", "N^y").size() == 1);
}

TEST_CASE("chain blocking follows the non-collider rule") {
  // a -> m -> b: m is a non-collider; conditioning on m blocks.
  const auto g = make_graph({"a", "m", "b"}, {{"a", "m"}, {"m", "b"}});
  const auto trails = enumerate_allowed_trails(g, "a", "b");
  REQUIRE(trails.size() == 1);
  CHECK(!is_blocked(g, trails[0], {}));
  CHECK(is_blocked(g, trails[0], {"m"}));
}

TEST_CASE("fork blocking follows the non-collider rule") {
  // a <- m -> b.
  const auto g = make_graph({"a", "m", "b"}, {{"m", "a"}, {"m", "b"}});
  const auto trails = enumerate_allowed_trails(g, "a", "b");
  REQUIRE(trails.size() == 1);
  CHECK(!is_blocked(g, trails[0], {}));
  CHECK(is_blocked(g, trails[0], {"m"}));
}

TEST_CASE("collider blocking inverts: open only under conditioning") {
  // a -> m <- c, with m -> b so a trail into b exists through the collider.
  const auto g = make_graph({"a", "m", "c", "b"},
                            {{"a", "m"}, {"c", "m"}, {"m", "b"}, {"c", "b"}});
  // Trail a -> m <- c -> b has collider m.
  const auto trails = enumerate_allowed_trails(g, "a", "b");
  Trail via_collider;
  for (const Trail& t : trails)
    if (t.vertices == std::vector<std::string>{"a", "m", "c", "b"}) via_collider = t;
  REQUIRE(via_collider.vertices.size() == 4);
  CHECK(is_blocked(g, via_collider, {}));          // collider closed by default
  CHECK(!is_blocked(g, via_collider, {"m"}));      // conditioning opens it
  CHECK(!is_blocked(g, via_collider, {"b"}));      // ...or any of its descendants
}

TEST_CASE("trail counts on the running two-confounder graph match a frozen enumeration") {
  const LocalIndependenceGraph g = eliminable_example_graph();
  g.validate();
  // Counted independently with a standalone path enumerator and frozen.
  CHECK(enumerate_allowed_trails(g, "U_1", "N^a").size() == 6);
  CHECK(enumerate_allowed_trails(g, "U_2", "N^x").size() == 5);
  CHECK(enumerate_allowed_trails(g, "U_1", "N^x").size() == 4);
  CHECK(enumerate_allowed_trails(g, "U_2", "N^a").size() == 1);
  CHECK(enumerate_allowed_trails(g, "N^x", "N^y").size() == 4);
  CHECK(enumerate_allowed_trails(g, "U_1", "U_2").empty());
}

TEST_CASE("delta separation detects a direct edge and respects conditioning") {
  const LocalIndependenceGraph g = confounded_example_graph();
  // U_1 -> N^y directly: never separated no matter the conditioning.
  CHECK(!delta_separated(g, {"N^y"}, "U_1", {"N^x", "N^a"}));
  // The two-confounder graph separates {N^a} from U_1 given the others.
  const LocalIndependenceGraph h = eliminable_example_graph();
  CHECK(delta_separated(h, {"N^a"}, "U_1", {"N^x", "N^y", "U_2"}));
  CHECK_THROWS((void)delta_separated(h, {"U_1"}, "U_1", {}));
}

TEST_CASE("the bundled example graphs decide as expected") {
  const EliminabilityReport good = check_eliminability(eliminable_example_graph());
  CHECK(good.eliminable);
  REQUIRE(good.witnesses.size() == 2);
  for (const EliminabilityWitness& w : good.witnesses) CHECK(w.satisfied);

  const EliminabilityReport bad = check_eliminability(confounded_example_graph());
  CHECK(!bad.eliminable);
  bool saw_direct_edge = false;
  for (const EliminabilityWitness& w : bad.witnesses)
    for (const Trail& t : w.failing_trails)
      if (t.vertices.size() == 2) saw_direct_edge = true;
  CHECK(saw_direct_edge);
}

TEST_CASE("no unobserved nodes is vacuously eliminable") {
  auto g = make_graph({"N^x", "N^y", "N^a"}, {{"N^x", "N^y"}, {"N^y", "N^a"}});
  const EliminabilityReport r = check_eliminability(g);
  CHECK(r.eliminable);
  CHECK(r.witnesses.empty());
}

TEST_CASE("renaming unobserved nodes does not change the verdict") {
  LocalIndependenceGraph g = eliminable_example_graph();
  for (auto& v : g.nodes)
    if (v == "U_1") v = "hidden_state";
  for (auto& [a, b] : g.edges) {
    if (a == "U_1") a = "hidden_state";
    if (b == "U_1") b = "hidden_state";
  }
  g.unobserved_order[0] = "hidden_state";
  CHECK(check_eliminability(g).eliminable);
}

TEST_CASE("validation rejects malformed graphs") {
  auto missing = make_graph({"N^x", "N^y", "N^a"}, {{"N^x", "ghost"}});
  CHECK_THROWS(missing.validate());
  auto self_loop = make_graph({"N^x", "N^y", "N^a"}, {{"N^x", "N^x"}});
  CHECK_THROWS(self_loop.validate());
  auto wrong_observed = make_graph({"N^x", "N^y"}, {});
  CHECK_THROWS(wrong_observed.validate());
  auto dup = make_graph({"N^x", "N^y", "N^a", "U_1"}, {}, {"U_1", "U_1"});
  CHECK_THROWS(dup.validate());
}

TEST_CASE("descendants follow directed reachability") {
  const auto g = make_graph({"a", "b", "c", "d"}, {{"a", "b"}, {"b", "c"}, {"d", "c"}});
  const auto d = g.descendants("a");
  CHECK(d == std::set<std::string>{"a", "b", "c"});
  CHECK(g.descendants("c") == std::set<std::string>{"c"});
}

TEST_CASE("random graphs agree with an independent reference implementation") {
  RngStream rng(2024);
  int eliminable_count = 0;
  for (int trial = 0; trial < 300; ++trial) {
    RngStream draw = rng.split(static_cast<std::uint64_t>(trial));
    const int n_unobserved = 1 + static_cast<int>(draw.uniform_index(2));
    std::vector<std::string> nodes{"N^x", "N^y", "N^a"};
    std::vector<std::string> unobserved;
    for (int u = 0; u < n_unobserved; ++u) {
      unobserved.push_back("U_" + std::to_string(u + 1));
      nodes.push_back(unobserved.back());
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const std::string& a : nodes)
      for (const std::string& b : nodes)
        if (a != b && draw.bernoulli(0.35)) edges.emplace_back(a, b);
    const auto g = make_graph(nodes, edges, unobserved);
    const bool got = check_eliminability(g).eliminable;
    const bool want = Reference(g).eliminable(g);
    CHECK(got == want);
    if (got) ++eliminable_count;
  }
  // The sweep must exercise both verdicts to mean anything.
  CHECK(eliminable_count > 10);
  CHECK(eliminable_count < 290);
}

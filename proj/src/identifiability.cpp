#include "edq/identifiability.hpp"

#include <algorithm>
#include <stdexcept>

namespace edq {

namespace {

const char* kFeatureNode = "N^x";
const char* kOutcomeNode = "N^y";
const char* kTreatmentNode = "N^a";

}  // namespace

void LocalIndependenceGraph::validate() const {
  auto known = [&](const std::string& v) {
    return std::find(nodes.begin(), nodes.end(), v) != nodes.end();
  };
  for (const auto& [from, to] : edges) {
    if (!known(from) || !known(to))
      throw std::invalid_argument("graph edge references unknown node: " + from + "->" + to);
    if (from == to) throw std::invalid_argument("self-loop not allowed: " + from);
  }
  std::set<std::string> unobserved(unobserved_order.begin(), unobserved_order.end());
  if (unobserved.size() != unobserved_order.size())
    throw std::invalid_argument("unobserved_order has duplicates");
  for (const std::string& u : unobserved_order)
    if (!known(u)) throw std::invalid_argument("unobserved node not in node set: " + u);
  std::set<std::string> observed;
  for (const std::string& v : nodes)
    if (!unobserved.count(v)) observed.insert(v);
  const std::set<std::string> expected{kFeatureNode, kOutcomeNode, kTreatmentNode};
  if (observed != expected)
    throw std::invalid_argument("observed nodes must be exactly {N^x, N^y, N^a}");
}

bool LocalIndependenceGraph::has_edge(const std::string& from, const std::string& to) const {
  return std::find(edges.begin(), edges.end(), std::make_pair(from, to)) != edges.end();
}

std::vector<std::string> LocalIndependenceGraph::parents(const std::string& v) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges)
    if (to == v) out.push_back(from);
  return out;
}

std::vector<std::string> LocalIndependenceGraph::children(const std::string& v) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges)
    if (from == v) out.push_back(to);
  return out;
}

std::set<std::string> LocalIndependenceGraph::descendants(const std::string& v) const {
  std::set<std::string> seen{v};
  std::vector<std::string> frontier{v};
  while (!frontier.empty()) {
    const std::string cur = frontier.back();
    frontier.pop_back();
    for (const std::string& c : children(cur))
      if (seen.insert(c).second) frontier.push_back(c);
  }
  return seen;
}

namespace {

void extend_trails(const LocalIndependenceGraph& g, Trail& cur, const std::string& to,
                   std::vector<Trail>& out) {
  const std::string head = cur.vertices.back();  // copy: push_back below reallocates
  for (const std::string& next : g.nodes) {
    if (std::find(cur.vertices.begin(), cur.vertices.end(), next) != cur.vertices.end()) continue;
    // A step may use a forward edge (head -> next) or traverse (next -> head)
    // against its direction; when both edges exist the two are distinct trails.
    for (const bool forward : {true, false}) {
      const bool exists = forward ? g.has_edge(head, next) : g.has_edge(next, head);
      if (!exists) continue;
      if (next == to && !forward) continue;  // final edge must point into `to`
      cur.vertices.push_back(next);
      cur.forward.push_back(forward);
      if (next == to)
        out.push_back(cur);
      else
        extend_trails(g, cur, to, out);
      cur.vertices.pop_back();
      cur.forward.pop_back();
    }
  }
}

}  // namespace

std::vector<Trail> enumerate_allowed_trails(const LocalIndependenceGraph& g,
                                            const std::string& from, const std::string& to) {
  if (from == to) throw std::invalid_argument("enumerate_allowed_trails: from == to");
  std::vector<Trail> out;
  Trail cur;
  cur.vertices.push_back(from);
  extend_trails(g, cur, to, out);
  return out;
}

bool is_blocked(const LocalIndependenceGraph& g, const Trail& trail,
                const std::set<std::string>& conditioning) {
  if (trail.vertices.size() != trail.forward.size() + 1)
    throw std::invalid_argument("is_blocked: malformed trail");
  for (std::size_t j = 1; j + 1 < trail.vertices.size(); ++j) {
    const std::string& v = trail.vertices[j];
    const bool collider = trail.forward[j - 1] && !trail.forward[j];  // -> v <-
    if (!collider) {
      if (conditioning.count(v)) return true;
    } else {
      const std::set<std::string> desc = g.descendants(v);
      bool any_conditioned = false;
      for (const std::string& d : desc)
        if (conditioning.count(d)) {
          any_conditioned = true;
          break;
        }
      if (!any_conditioned) return true;
    }
  }
  return false;
}

bool delta_separated(const LocalIndependenceGraph& g, const std::set<std::string>& A,
                     const std::string& u, const std::set<std::string>& C) {
  if (A.count(u)) throw std::invalid_argument("delta_separated: u must not be in A");
  std::set<std::string> blockers = C;
  blockers.insert(u);
  for (const std::string& a : A)
    for (const Trail& trail : enumerate_allowed_trails(g, u, a))
      if (!is_blocked(g, trail, blockers)) return false;
  return true;
}

EliminabilityReport check_eliminability(const LocalIndependenceGraph& g) {
  g.validate();
  EliminabilityReport report;
  report.eliminable = true;
  for (std::size_t k = 0; k < g.unobserved_order.size(); ++k) {
    const std::string& uk = g.unobserved_order[k];
    const std::set<std::string> later(g.unobserved_order.begin() + static_cast<std::ptrdiff_t>(k) + 1,
                                      g.unobserved_order.end());
    std::set<std::string> context{kFeatureNode, kOutcomeNode, kTreatmentNode};
    context.insert(later.begin(), later.end());

    // Either bullet suffices; each node of A uses the context minus itself as
    // its conditioning set, per the definition's set-level reading.
    auto bullet_holds = [&](const std::set<std::string>& A, EliminabilityWitness& w) {
      w.separated_set = A;
      for (const std::string& a : A) {
        std::set<std::string> cond = context;
        cond.erase(a);
        w.conditioning_set = cond;
        std::set<std::string> blockers = cond;
        blockers.insert(uk);
        for (const Trail& trail : enumerate_allowed_trails(g, uk, a))
          if (!is_blocked(g, trail, blockers)) w.failing_trails.push_back(trail);
        if (!w.failing_trails.empty()) return false;
      }
      return true;
    };

    std::set<std::string> a1{kFeatureNode, kOutcomeNode};
    a1.insert(later.begin(), later.end());
    EliminabilityWitness w1{uk, 1};
    if (bullet_holds(a1, w1)) {
      w1.satisfied = true;
      report.witnesses.push_back(std::move(w1));
      continue;
    }
    EliminabilityWitness w2{uk, 2};
    if (bullet_holds({kTreatmentNode}, w2)) {
      w2.satisfied = true;
      report.witnesses.push_back(std::move(w2));
      continue;
    }
    report.eliminable = false;
    report.witnesses.push_back(std::move(w1));
    report.witnesses.push_back(std::move(w2));
  }
  return report;
}

LocalIndependenceGraph eliminable_example_graph() {
  LocalIndependenceGraph g;
  g.nodes = {kFeatureNode, kOutcomeNode, kTreatmentNode, "U_1", "U_2"};
  g.unobserved_order = {"U_1", "U_2"};
  g.edges = {{"U_1", kFeatureNode}, {"U_1", kOutcomeNode}, {"U_2", kTreatmentNode}};
  const std::vector<std::string> observed{kFeatureNode, kOutcomeNode, kTreatmentNode};
  for (const std::string& a : observed)
    for (const std::string& b : observed)
      if (a != b) g.edges.emplace_back(a, b);
  return g;
}

LocalIndependenceGraph confounded_example_graph() {
  LocalIndependenceGraph g;
  g.nodes = {kFeatureNode, kOutcomeNode, kTreatmentNode, "U_1"};
  g.unobserved_order = {"U_1"};
  g.edges = {{"U_1", kTreatmentNode}, {"U_1", kOutcomeNode}};
  const std::vector<std::string> observed{kFeatureNode, kOutcomeNode, kTreatmentNode};
  for (const std::string& a : observed)
    for (const std::string& b : observed)
      if (a != b) g.edges.emplace_back(a, b);
  return g;
}

}  // namespace edq

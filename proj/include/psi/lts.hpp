#ifndef PSI_LTS_HPP
#define PSI_LTS_HPP

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "psi/symbolic.hpp"

namespace psi {

enum class LtsMode { late, early, symbolic };

inline LtsMode lts_mode_from(const std::string& s) {
  if (s == "late") return LtsMode::late;
  if (s == "early") return LtsMode::early;
  if (s == "symbolic") return LtsMode::symbolic;
  throw error("unknown lts mode: " + s + " (expected late|early|symbolic)");
}

struct LtsEdge {
  int from = 0, to = 0;
  std::string action;
  nlohmann::json constraint;  // null for concrete modes
};

struct Lts {
  std::vector<std::string> nodes;  // printed agents
  std::vector<bool> exhausted;     // per node: replication bound hit there
  std::vector<LtsEdge> edges;
  bool truncated = false;  // node limit reached
};

// Reachable transition graph within the domain bounds, nodes identified
// up to alpha.
inline Lts build_lts(const Instance& inst, LtsMode mode, const Assertion& env,
                     const AgentRef& root, const DomainConfig& dom,
                     std::size_t node_limit = 4096) {
  Lts lts;
  std::map<std::string, int> ids;
  std::deque<std::pair<AgentRef, int>> queue;

  auto node_id = [&](const AgentRef& a) {
    std::string key = canonical_print(a);
    auto it = ids.find(key);
    if (it != ids.end()) return std::pair<int, bool>{it->second, false};
    int id = int(lts.nodes.size());
    ids.emplace(key, id);
    lts.nodes.push_back(print_agent(a));
    lts.exhausted.push_back(false);
    return std::pair<int, bool>{id, true};
  };

  auto [rid, fresh0] = node_id(root);
  queue.emplace_back(root, rid);

  while (!queue.empty()) {
    auto [agent, id] = queue.front();
    queue.pop_front();
    if (lts.nodes.size() > node_limit) {
      lts.truncated = true;
      break;
    }
    if (mode == LtsMode::symbolic) {
      auto ts = symbolic_transitions(inst, env, agent, dom.names, dom.rep_bound);
      lts.exhausted[id] = ts.exhausted;
      for (const auto& t : ts.items) {
        auto [to, is_new] = node_id(t.target);
        lts.edges.push_back(LtsEdge{id, to, print_action(t.action), to_json(t.constraint)});
        if (is_new) queue.emplace_back(t.target, to);
      }
    } else {
      auto ts = mode == LtsMode::late ? late_transitions(inst, env, agent, dom)
                                      : early_transitions(inst, env, agent, dom);
      lts.exhausted[id] = ts.exhausted;
      for (const auto& t : ts.items) {
        auto [to, is_new] = node_id(t.target);
        lts.edges.push_back(LtsEdge{id, to, print_action(t.action), nullptr});
        if (is_new) queue.emplace_back(t.target, to);
      }
    }
  }
  return lts;
}

inline nlohmann::json to_json(const Lts& lts) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < lts.nodes.size(); ++i)
    nodes.push_back({{"id", i}, {"agent", lts.nodes[i]}, {"exhausted", bool(lts.exhausted[i])}});
  nlohmann::json edges = nlohmann::json::array();
  for (const LtsEdge& e : lts.edges) {
    nlohmann::json j{{"from", e.from}, {"to", e.to}, {"action", e.action}};
    if (!e.constraint.is_null()) j["constraint"] = e.constraint;
    edges.push_back(j);
  }
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}, {"truncated", lts.truncated}};
}

inline std::string to_dot(const Lts& lts) {
  std::string s = "digraph lts {\n";
  auto esc = [](const std::string& x) {
    std::string r;
    for (char c : x) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r;
  };
  for (std::size_t i = 0; i < lts.nodes.size(); ++i) {
    s += "  n" + std::to_string(i) + " [label=\"" + esc(lts.nodes[i]) + "\"";
    if (lts.exhausted[i]) s += ",style=dashed";
    s += "];\n";
  }
  for (const LtsEdge& e : lts.edges) {
    std::string label = e.action;
    if (!e.constraint.is_null()) label += "\\n" + esc(e.constraint.dump());
    s += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" +
         esc(label) + "\"];\n";
  }
  return s + "}\n";
}

}  // namespace psi

#endif  // PSI_LTS_HPP

#ifndef PSI_BISIM_HPP
#define PSI_BISIM_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "psi/constraints.hpp"
#include "psi/params.hpp"
#include "psi/symbolic.hpp"

namespace psi {

// ---- probes and static equivalence ----

inline void collect_conditions(const AgentRef& p, std::vector<Condition>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>)
          collect_conditions(n.cont, out);
        else if constexpr (std::is_same_v<T, InputNode>)
          collect_conditions(n.cont, out);
        else if constexpr (std::is_same_v<T, CaseNode>) {
          for (const CaseBranch& br : n.branches) {
            out.push_back(br.cond);
            collect_conditions(br.body, out);
          }
        } else if constexpr (std::is_same_v<T, RestrictionNode>)
          collect_conditions(n.body, out);
        else if constexpr (std::is_same_v<T, ParallelNode>) {
          collect_conditions(n.left, out);
          collect_conditions(n.right, out);
        } else if constexpr (std::is_same_v<T, ReplicationNode>)
          collect_conditions(n.body, out);
      },
      p->node);
}

// Probe set for static equivalence: the instance's probes over every name
// in scope, extended with the conditions occurring in the agents.
inline std::vector<Condition> static_probes(const Instance& inst, const Assertion& env,
                                            const AgentRef& p, const AgentRef& q,
                                            const DomainConfig& dom) {
  NameSet pool = dom.names;
  collect_support(env, pool);
  collect_support(p, pool);
  collect_support(q, pool);
  auto probes = inst.probe_conditions(pool, dom);
  std::vector<Condition> extra;
  collect_conditions(p, extra);
  collect_conditions(q, extra);
  probes.insert(probes.end(), extra.begin(), extra.end());
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  return probes;
}

inline bool static_equivalent(const Instance& inst, const Assertion& env, const AgentRef& p,
                              const AgentRef& q, const DomainConfig& dom) {
  Frame fp = frame_compose(Frame{{}, env}, frame_of(p));
  Frame fq = frame_compose(Frame{{}, env}, frame_of(q));
  return frame_equivalent(inst, fp, fq, static_probes(inst, env, p, q, dom));
}

inline bool symbolic_static_equivalent_sols(const Instance& inst,
                                            const std::vector<Solution>& sols,
                                            const AgentRef& p, const AgentRef& q,
                                            const DomainConfig& dom) {
  for (const Solution& s : sols) {
    try {
      AgentRef ps = psi::apply(s.subst, p);
      AgentRef qs = psi::apply(s.subst, q);
      if (!static_equivalent(inst, s.assertion, ps, qs, dom)) return false;
    } catch (const substitution_error&) {
      // outside the instance's substitution domain: no induced frame
      continue;
    }
  }
  return true;
}

inline bool symbolic_static_equivalent(const Instance& inst, const Constraint& c,
                                       const AgentRef& p, const AgentRef& q,
                                       const DomainConfig& dom, const NameSet& pinned = {}) {
  auto sols = solutions(inst, c, dom, solution_targets(c, dom, pinned));
  return symbolic_static_equivalent_sols(inst, sols, p, q, dom);
}

// ---- placeholder normalization ----
//
// Fresh names generated during exploration (symbolic subjects, freed
// input binders, extruded names) are renumbered to stable $-names at
// every triple entry, so alpha-variant triples produced along different
// search paths coincide.

inline bool is_placeholder(Name n) {
  if (n.id() >= kFreshBase && n.id() < kCanonBase) return true;
  return display(n).find('$') != std::string::npos;
}

namespace detail {

inline void order_placeholders(Name n, std::vector<Name>& out, NameSet& seen) {
  if (is_placeholder(n) && seen.insert(n).second) out.push_back(n);
}
inline void order_placeholders(const Term& t, std::vector<Name>& out, NameSet& seen) {
  switch (t.kind) {
    case Term::Kind::name: order_placeholders(t.name, out, seen); break;
    case Term::Kind::literal: break;
    case Term::Kind::app:
      for (const Term& a : t.args) order_placeholders(a, out, seen);
      break;
  }
}
inline void order_placeholders(const Condition& c, std::vector<Name>& out, NameSet& seen) {
  order_placeholders(c.lhs, out, seen);
  order_placeholders(c.rhs, out, seen);
}
inline void order_placeholders(const Assertion& a, std::vector<Name>& out, NameSet& seen) {
  for (const Binding& b : a.binds) {
    order_placeholders(b.var, out, seen);
    order_placeholders(b.value, out, seen);
  }
}
inline void order_placeholders(const Substitution& s, std::vector<Name>& out, NameSet& seen) {
  for (const auto& [k, v] : s.map) {
    order_placeholders(k, out, seen);
    order_placeholders(v, out, seen);
  }
}
inline void order_placeholders(const AgentRef& p, std::vector<Name>& out, NameSet& seen) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>) {
          order_placeholders(n.subject, out, seen);
          order_placeholders(n.object, out, seen);
          order_placeholders(n.cont, out, seen);
        } else if constexpr (std::is_same_v<T, InputNode>) {
          order_placeholders(n.subject, out, seen);
          order_placeholders(n.binder, out, seen);
          order_placeholders(n.cont, out, seen);
        } else if constexpr (std::is_same_v<T, CaseNode>) {
          for (const CaseBranch& br : n.branches) {
            order_placeholders(br.cond, out, seen);
            order_placeholders(br.body, out, seen);
          }
        } else if constexpr (std::is_same_v<T, RestrictionNode>) {
          order_placeholders(n.name, out, seen);
          order_placeholders(n.body, out, seen);
        } else if constexpr (std::is_same_v<T, ParallelNode>) {
          order_placeholders(n.left, out, seen);
          order_placeholders(n.right, out, seen);
        } else if constexpr (std::is_same_v<T, ReplicationNode>) {
          order_placeholders(n.body, out, seen);
        } else {
          order_placeholders(n.psi, out, seen);
        }
      },
      p->node);
}
inline void order_placeholders(const Conjunct& c, std::vector<Name>& out, NameSet& seen) {
  if (const auto* a = std::get_if<AtomicConstraint>(&c)) {
    for (Name b : a->binders) order_placeholders(b, out, seen);
    order_placeholders(a->env, out, seen);
    order_placeholders(a->cond, out, seen);
  } else if (const auto* e = std::get_if<EqConstraint>(&c)) {
    order_placeholders(e->lhs, out, seen);
    order_placeholders(e->rhs, out, seen);
  } else if (const auto* f = std::get_if<FreshConstraint>(&c)) {
    order_placeholders(f->name, out, seen);
    if (const auto* t = std::get_if<Term>(&f->target))
      order_placeholders(*t, out, seen);
    else
      order_placeholders(std::get<AgentRef>(f->target), out, seen);
  } else {
    for (const Solution& s : std::get<ExtConstraint>(c).sols) {
      order_placeholders(s.subst, out, seen);
      order_placeholders(s.assertion, out, seen);
    }
  }
}
inline void order_placeholders(const Constraint& c, std::vector<Name>& out, NameSet& seen) {
  for (const Conjunct& j : c.conjuncts) order_placeholders(j, out, seen);
}

inline std::string name_stem(Name n) {
  std::string d = display(n);
  std::string s;
  for (char ch : d) {
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_')
      s += ch;
    else
      break;
  }
  return s.empty() ? "n" : s;
}

template <class Fn>
void renumber_apply(const std::vector<Name>& ordered, Fn&& apply_swap) {
  // two-phase through a reserved range so the chain never interferes
  for (std::size_t i = 0; i < ordered.size(); ++i)
    apply_swap(ordered[i], NameTable::instance().canon(400000 + i));
  for (std::size_t i = 0; i < ordered.size(); ++i)
    apply_swap(NameTable::instance().canon(400000 + i),
               intern(name_stem(ordered[i]) + "$" + std::to_string(i)));
}

}  // namespace detail

// ---- verdicts ----

struct Verdict {
  bool bisimilar = false;
  bool exhausted = false;
  nlohmann::json witness = nlohmann::json::array();
  nlohmann::json counterexample;  // null on success

  nlohmann::json to_json() const {
    nlohmann::json j{{"bisimilar", bisimilar}, {"domain_exhausted", exhausted}};
    if (bisimilar)
      j["witness"] = witness;
    else
      j["counterexample"] = counterexample;
    return j;
  }
};

// ---- concrete bisimulation (worklist over reachable triples) ----

struct ConcreteTripleRecord {
  std::string key;
  Assertion env;
  AgentRef p, q;
  bool identical = false;
};

// Responder transitions whose action equals the challenger's, with the
// responder's extruded names aligned onto the challenger's.
inline std::vector<std::pair<ConcreteAction, AgentRef>> aligned_concrete(
    const ConcreteAction& want, const ConcreteTransition& r) {
  std::vector<std::pair<ConcreteAction, AgentRef>> out;
  if (r.action.kind != want.kind) return out;
  if (want.kind == ConcreteAction::Kind::tau) {
    out.emplace_back(r.action, r.target);
    return out;
  }
  if (want.kind != ConcreteAction::Kind::output) return out;
  if (!(r.action.subject == want.subject)) return out;
  if (r.action.extruded.size() != want.extruded.size()) return out;
  std::vector<std::size_t> perm(r.action.extruded.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  do {
    Term obj = r.action.object;
    AgentRef tgt = r.target;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      Name from = r.action.extruded[perm[i]];
      Name to = want.extruded[i];
      if (from == to) continue;
      obj = swap(from, to, obj);
      tgt = swap(from, to, tgt);
    }
    if (obj == want.object) out.emplace_back(want, tgt);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

class ConcreteBisim {
 public:
  ConcreteBisim(const Instance& inst, const DomainConfig& dom) : inst_(inst), dom_(dom) {}

  Verdict run(const Assertion& env, const AgentRef& p, const AgentRef& q) {
    Verdict v;
    committed_.clear();
    memo_.clear();
    stack_.clear();
    exhausted_ = false;
    nlohmann::json cex;
    std::vector<ConcreteTripleRecord> pend;
    auto res = check(env, p, q, cex, pend);
    v.bisimilar = res.ok;
    v.exhausted = exhausted_;
    if (res.ok) {
      for (auto& r : pend) committed_.emplace(r.key, r);
      for (const auto& [k, r] : committed_) {
        v.witness.push_back({{"env", print_assertion(r.env)},
                             {"left", print_agent(r.p)},
                             {"right", print_agent(r.q)},
                             {"identical", r.identical}});
      }
    } else {
      v.counterexample = cex;
    }
    return v;
  }

  const std::map<std::string, ConcreteTripleRecord>& relation() const { return committed_; }

  static std::string triple_key(const Assertion& env, const AgentRef& p, const AgentRef& q) {
    std::string a = canonical_print(p), b = canonical_print(q);
    if (b < a) std::swap(a, b);
    return print_assertion(env) + " || " + a + " || " + b;
  }

  // Renumbers exploration-generated names so alpha-variant triples meet.
  static void normalize(Assertion& env, AgentRef& p, AgentRef& q) {
    std::vector<Name> ordered;
    NameSet seen;
    detail::order_placeholders(env, ordered, seen);
    detail::order_placeholders(p, ordered, seen);
    detail::order_placeholders(q, ordered, seen);
    detail::renumber_apply(ordered, [&](Name from, Name to) {
      env = swap(from, to, env);
      p = swap(from, to, p);
      q = swap(from, to, q);
    });
  }

 private:
  struct Res {
    bool ok = false;
    int min_dep = std::numeric_limits<int>::max();
  };

  Res check(Assertion env, AgentRef p, AgentRef q, nlohmann::json& cex,
            std::vector<ConcreteTripleRecord>& pend) {
    normalize(env, p, q);
    std::string key = triple_key(env, p, q);

    auto mit = memo_.find(key);
    if (mit != memo_.end()) {
      if (!mit->second) cex = fail_step(env, p, q, "revisited failing triple", {});
      return Res{mit->second, std::numeric_limits<int>::max()};
    }
    for (std::size_t i = 0; i < stack_.size(); ++i)
      if (stack_[i] == key) return Res{true, int(i)};  // coinductive assumption

    int depth = int(stack_.size());
    stack_.push_back(key);
    Res res = expand(env, p, q, key, cex, pend);
    stack_.pop_back();

    if (!res.ok) {
      memo_[key] = false;
    } else if (res.min_dep >= depth) {
      // no live assumptions used: safe to commit
      res.min_dep = std::numeric_limits<int>::max();
      memo_[key] = true;
    }
    return res;
  }

  Res expand(const Assertion& env, const AgentRef& p, const AgentRef& q,
             const std::string& key, nlohmann::json& cex,
             std::vector<ConcreteTripleRecord>& pend) {
    Res res;
    res.ok = true;

    ConcreteTripleRecord rec{key, env, p, q, alpha_eq(p, q)};
    if (rec.identical) {
      pend.push_back(rec);
      return res;
    }

    if (!static_equivalent(inst_, env, p, q, dom_)) {
      cex = fail_step(env, p, q, "static equivalence fails", {});
      res.ok = false;
      return res;
    }

    // extension of arbitrary assertion, over the finite assertion domain
    for (const Assertion& ext : inst_.assertion_domain(dom_.names, dom_)) {
      Assertion env2 = compose(env, ext);
      if (env2 == env) continue;
      std::vector<ConcreteTripleRecord> sub;
      nlohmann::json subcex;
      Res r = check(env2, p, q, subcex, sub);
      res.min_dep = std::min(res.min_dep, r.min_dep);
      if (!r.ok) {
        cex = prepend_step(env, p, q, "under extended assertion " + print_assertion(ext),
                           subcex);
        res.ok = false;
        return res;
      }
      pend.insert(pend.end(), sub.begin(), sub.end());
    }

    NameSet pool = dom_.names;
    collect_support(p, pool);
    collect_support(q, pool);
    collect_support(env, pool);
    auto objects = inst_.term_domain(pool, dom_);

    for (int side = 0; side < 2; ++side) {
      const AgentRef& challenger = side == 0 ? p : q;
      const AgentRef& responder = side == 0 ? q : p;
      auto cts = late_transitions(inst_, env, challenger, dom_);
      auto rts = late_transitions(inst_, env, responder, dom_);
      exhausted_ = exhausted_ || cts.exhausted || rts.exhausted;

      for (const ConcreteTransition& t : cts.items) {
        if (t.action.kind == ConcreteAction::Kind::input_late) {
          for (const Term& obj : objects) {
            AgentRef dp = agent_substitute(t.target, {t.action.binder}, {obj});
            bool matched = false;
            nlohmann::json last_sub;
            for (const ConcreteTransition& r : rts.items) {
              if (r.action.kind != ConcreteAction::Kind::input_late) continue;
              if (!(r.action.subject == t.action.subject)) continue;
              AgentRef rt = swap(r.action.binder, t.action.binder, r.target);
              AgentRef dq = agent_substitute(rt, {t.action.binder}, {obj});
              std::vector<ConcreteTripleRecord> sub;
              nlohmann::json subcex;
              Res rr = check(env, side == 0 ? dp : dq, side == 0 ? dq : dp, subcex, sub);
              res.min_dep = std::min(res.min_dep, rr.min_dep);
              if (rr.ok) {
                matched = true;
                pend.insert(pend.end(), sub.begin(), sub.end());
                break;
              }
              last_sub = subcex;
            }
            if (!matched) {
              cex = prepend_step(env, p, q,
                                 std::string(side == 0 ? "left" : "right") + " input " +
                                     print_action(t.action) + " with object " +
                                     print_term(obj) + " unmatched",
                                 last_sub);
              res.ok = false;
              return res;
            }
          }
        } else {
          bool matched = false;
          nlohmann::json last_sub;
          for (const ConcreteTransition& r : rts.items) {
            for (const auto& [ract, rtgt] : aligned_concrete(t.action, r)) {
              std::vector<ConcreteTripleRecord> sub;
              nlohmann::json subcex;
              Res rr = check(env, side == 0 ? t.target : rtgt,
                             side == 0 ? rtgt : t.target, subcex, sub);
              res.min_dep = std::min(res.min_dep, rr.min_dep);
              if (rr.ok) {
                matched = true;
                pend.insert(pend.end(), sub.begin(), sub.end());
                break;
              }
              last_sub = subcex;
            }
            if (matched) break;
          }
          if (!matched) {
            cex = prepend_step(env, p, q,
                               std::string(side == 0 ? "left" : "right") + " action " +
                                   print_action(t.action) + " unmatched",
                               last_sub);
            res.ok = false;
            return res;
          }
        }
      }
    }

    pend.push_back(rec);
    return res;
  }

  nlohmann::json fail_step(const Assertion& env, const AgentRef& p, const AgentRef& q,
                           const std::string& why, nlohmann::json inner) {
    nlohmann::json step{{"env", print_assertion(env)},
                        {"left", print_agent(p)},
                        {"right", print_agent(q)},
                        {"reason", why}};
    nlohmann::json arr = nlohmann::json::array();
    arr.push_back(step);
    if (inner.is_array())
      for (const auto& x : inner) arr.push_back(x);
    return arr;
  }

  nlohmann::json prepend_step(const Assertion& env, const AgentRef& p, const AgentRef& q,
                              const std::string& why, const nlohmann::json& inner) {
    return fail_step(env, p, q, why, inner);
  }

  const Instance& inst_;
  DomainConfig dom_;
  std::map<std::string, bool> memo_;
  std::map<std::string, ConcreteTripleRecord> committed_;
  std::vector<std::string> stack_;
  bool exhausted_ = false;
};

inline Verdict concrete_bisim(const Instance& inst, const Assertion& env, const AgentRef& p,
                              const AgentRef& q, const DomainConfig& dom) {
  ConcreteBisim cb(inst, dom);
  return cb.run(env, p, q);
}

// Independent clause-by-clause re-verification of a concrete witness
// relation (membership checks against the recorded triple set).
inline bool replay_concrete_witness(const Instance& inst,
                                    const std::map<std::string, ConcreteTripleRecord>& rel,
                                    const DomainConfig& dom, std::string* why = nullptr) {
  auto complain = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  auto member = [&](Assertion env, AgentRef a, AgentRef b) {
    if (alpha_eq(a, b)) return true;
    ConcreteBisim::normalize(env, a, b);
    return rel.count(ConcreteBisim::triple_key(env, a, b)) > 0;
  };
  for (const auto& [key, r] : rel) {
    if (r.identical) {
      if (!alpha_eq(r.p, r.q)) return complain("identical-flagged triple differs: " + key);
      continue;
    }
    if (!static_equivalent(inst, r.env, r.p, r.q, dom))
      return complain("static equivalence fails: " + key);
    for (const Assertion& ext : inst.assertion_domain(dom.names, dom)) {
      Assertion env2 = compose(r.env, ext);
      if (env2 == r.env) continue;
      if (!member(env2, r.p, r.q))
        return complain("extension " + print_assertion(ext) + " escapes the relation: " + key);
    }
    NameSet pool = dom.names;
    collect_support(r.p, pool);
    collect_support(r.q, pool);
    collect_support(r.env, pool);
    auto objects = inst.term_domain(pool, dom);
    for (int side = 0; side < 2; ++side) {
      const AgentRef& challenger = side == 0 ? r.p : r.q;
      const AgentRef& responder = side == 0 ? r.q : r.p;
      auto cts = late_transitions(inst, r.env, challenger, dom);
      auto rts = late_transitions(inst, r.env, responder, dom);
      for (const ConcreteTransition& t : cts.items) {
        if (t.action.kind == ConcreteAction::Kind::input_late) {
          for (const Term& obj : objects) {
            AgentRef dp = agent_substitute(t.target, {t.action.binder}, {obj});
            bool ok = false;
            for (const ConcreteTransition& rr : rts.items) {
              if (rr.action.kind != ConcreteAction::Kind::input_late) continue;
              if (!(rr.action.subject == t.action.subject)) continue;
              AgentRef rt = swap(rr.action.binder, t.action.binder, rr.target);
              AgentRef dq = agent_substitute(rt, {t.action.binder}, {obj});
              if (member(r.env, side == 0 ? dp : dq, side == 0 ? dq : dp)) {
                ok = true;
                break;
              }
            }
            if (!ok)
              return complain("input " + print_action(t.action) + " object " +
                              print_term(obj) + " unmatched in " + key);
          }
        } else {
          bool ok = false;
          for (const ConcreteTransition& rr : rts.items) {
            for (const auto& [ract, rtgt] : aligned_concrete(t.action, rr)) {
              if (member(r.env, side == 0 ? t.target : rtgt, side == 0 ? rtgt : t.target)) {
                ok = true;
                break;
              }
            }
            if (ok) break;
          }
          if (!ok)
            return complain("action " + print_action(t.action) + " unmatched in " + key);
        }
      }
    }
  }
  return true;
}

}  // namespace psi

#include "psi/bisim_symbolic.hpp"

#endif  // PSI_BISIM_HPP

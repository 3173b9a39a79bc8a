#ifndef PSI_CONSTRAINTS_HPP
#define PSI_CONSTRAINTS_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "psi/agent.hpp"
#include "psi/instance.hpp"
#include "psi/syntax.hpp"

namespace psi {

// (nu a~){Psi |- phi}: the binders scope over env and cond.
struct AtomicConstraint {
  NameSeq binders;
  Assertion env;
  Condition cond;
};

struct EqConstraint {
  Term lhs, rhs;
};

// a # X, where X is a term or an agent.
struct FreshConstraint {
  Name name;
  std::variant<Term, AgentRef> target;
};

// A solution: a substitution of terms for names plus an assertion
// contributed by the environment.
struct Solution {
  Substitution subst;
  Assertion assertion;

  friend bool operator==(const Solution& a, const Solution& b) {
    return a.subst == b.subst && a.assertion == b.assertion;
  }
  friend bool operator<(const Solution& a, const Solution& b) {
    if (a.subst == b.subst) return a.assertion < b.assertion;
    return a.subst < b.subst;
  }
};

inline std::string print_solution(const Solution& s) {
  return "(" + print_substitution(s.subst) + ", " + print_assertion(s.assertion) + ")";
}

// An explicit finite solution set, used by the bisimulation checker to
// realize case splits. A pair solves it if it extends one of the listed
// pairs (identity entries pin names) with the same assertion.
struct ExtConstraint {
  std::vector<Solution> sols;  // sorted
};

using Conjunct = std::variant<AtomicConstraint, EqConstraint, FreshConstraint, ExtConstraint>;

struct Constraint {
  std::vector<Conjunct> conjuncts;
};

inline Constraint true_constraint() {
  return Constraint{{EqConstraint{Term::mk_lit(0), Term::mk_lit(0)}}};
}

inline Constraint conjoin(Constraint a, const Constraint& b) {
  a.conjuncts.insert(a.conjuncts.end(), b.conjuncts.begin(), b.conjuncts.end());
  return a;
}

inline Constraint mk_atomic(NameSeq binders, Assertion env, Condition cond) {
  return Constraint{{AtomicConstraint{std::move(binders), std::move(env), std::move(cond)}}};
}

// ---- nominal structure ----

inline void collect_support(const Conjunct& c, NameSet& out) {
  if (const auto* a = std::get_if<AtomicConstraint>(&c)) {
    NameSet inner;
    collect_support(a->env, inner);
    collect_support(a->cond, inner);
    for (Name b : a->binders) inner.erase(b);
    out.insert(inner.begin(), inner.end());
  } else if (const auto* e = std::get_if<EqConstraint>(&c)) {
    collect_support(e->lhs, out);
    collect_support(e->rhs, out);
  } else if (const auto* f = std::get_if<FreshConstraint>(&c)) {
    out.insert(f->name);
    if (const auto* t = std::get_if<Term>(&f->target))
      collect_support(*t, out);
    else
      collect_support(std::get<AgentRef>(f->target), out);
  } else {
    const auto& x = std::get<ExtConstraint>(c);
    for (const Solution& s : x.sols) {
      for (const auto& [k, v] : s.subst.map) {
        out.insert(k);
        collect_support(v, out);
      }
      collect_support(s.assertion, out);
    }
  }
}

inline void collect_support(const Constraint& c, NameSet& out) {
  for (const Conjunct& j : c.conjuncts) collect_support(j, out);
}

inline Conjunct swap(Name a, Name b, const Conjunct& c) {
  if (const auto* at = std::get_if<AtomicConstraint>(&c)) {
    NameSeq bs;
    for (Name n : at->binders) bs.push_back(swap_name(a, b, n));
    return AtomicConstraint{std::move(bs), swap(a, b, at->env), swap(a, b, at->cond)};
  }
  if (const auto* e = std::get_if<EqConstraint>(&c))
    return EqConstraint{swap(a, b, e->lhs), swap(a, b, e->rhs)};
  if (const auto* f = std::get_if<FreshConstraint>(&c)) {
    FreshConstraint r{swap_name(a, b, f->name), Term{}};
    if (const auto* t = std::get_if<Term>(&f->target))
      r.target = swap(a, b, *t);
    else
      r.target = swap(a, b, std::get<AgentRef>(f->target));
    return r;
  }
  const auto& x = std::get<ExtConstraint>(c);
  ExtConstraint r;
  for (const Solution& s : x.sols) r.sols.push_back(Solution{swap(a, b, s.subst), swap(a, b, s.assertion)});
  std::sort(r.sols.begin(), r.sols.end());
  return r;
}

inline Constraint swap(Name a, Name b, const Constraint& c) {
  Constraint r;
  for (const Conjunct& j : c.conjuncts) r.conjuncts.push_back(swap(a, b, j));
  return r;
}

// (nu a)C distributes over conjunction. Atomic conjuncts get the binder
// prepended; the other kinds have no binder slot, so the name is renamed
// away inside them (a bound name contributes nothing there).
inline Constraint restrict_name(Name a, const Constraint& c) {
  Constraint out;
  for (const Conjunct& j : c.conjuncts) {
    if (const auto* at = std::get_if<AtomicConstraint>(&j)) {
      AtomicConstraint r = *at;
      for (Name b : r.binders)
        if (b == a) {
          // shadowed binder: rename the inner one first
          NameSet avoid;
          collect_support(r.env, avoid);
          collect_support(r.cond, avoid);
          for (Name x : r.binders) avoid.insert(x);
          Name nb = freshen(b, avoid);
          r.env = swap(b, nb, r.env);
          r.cond = swap(b, nb, r.cond);
          for (Name& x : r.binders) x = swap_name(b, nb, x);
          break;
        }
      r.binders.insert(r.binders.begin(), a);
      out.conjuncts.push_back(std::move(r));
    } else {
      NameSet sup;
      collect_support(j, sup);
      if (!sup.count(a)) {
        out.conjuncts.push_back(j);
      } else {
        NameSet avoid = sup;
        avoid.insert(a);
        Name na = freshen(a, avoid);
        out.conjuncts.push_back(swap(a, na, j));
      }
    }
  }
  return out;
}

inline Constraint restrict_names(const NameSeq& names, const Constraint& c) {
  Constraint out = c;
  for (auto it = names.rbegin(); it != names.rend(); ++it) out = restrict_name(*it, out);
  return out;
}

// ---- printing ----

inline std::string print_conjunct(const Conjunct& c) {
  if (const auto* a = std::get_if<AtomicConstraint>(&c)) {
    std::string s;
    if (!a->binders.empty()) {
      s += "(new ";
      for (std::size_t i = 0; i < a->binders.size(); ++i) {
        if (i) s += ",";
        s += display(a->binders[i]);
      }
      s += ")";
    }
    return s + "{" + print_assertion(a->env) + " |- " + print_condition(a->cond) + "}";
  }
  if (const auto* e = std::get_if<EqConstraint>(&c)) {
    if (e->lhs == e->rhs) return "true";
    return "{" + print_term(e->lhs) + " = " + print_term(e->rhs) + "}";
  }
  if (const auto* f = std::get_if<FreshConstraint>(&c)) {
    std::string t = std::holds_alternative<Term>(f->target)
                        ? print_term(std::get<Term>(f->target))
                        : print_agent(std::get<AgentRef>(f->target));
    return "{" + display(f->name) + " # " + t + "}";
  }
  const auto& x = std::get<ExtConstraint>(c);
  std::string s = "{sols:";
  for (std::size_t i = 0; i < x.sols.size(); ++i) {
    if (i) s += ",";
    s += print_solution(x.sols[i]);
  }
  return s + "}";
}

inline std::string print_constraint(const Constraint& c) {
  if (c.conjuncts.empty()) return "true";
  std::string s;
  for (std::size_t i = 0; i < c.conjuncts.size(); ++i) {
    if (i) s += " /\\ ";
    s += print_conjunct(c.conjuncts[i]);
  }
  return s;
}

// Canonical form for dedup keys: atomic binders renamed to a reserved
// sequence.
inline std::string canonical_print_constraint(const Constraint& c) {
  Constraint r = c;
  std::uint64_t k = 300000;
  for (Conjunct& j : r.conjuncts) {
    if (auto* a = std::get_if<AtomicConstraint>(&j)) {
      for (Name& b : a->binders) {
        Name cn = NameTable::instance().canon(k++);
        a->env = swap(b, cn, a->env);
        a->cond = swap(b, cn, a->cond);
        b = cn;
      }
    }
  }
  return print_constraint(r);
}

// ---- solutions ----

inline bool check_solution(const Instance& inst, const Solution& s, const Conjunct& c) {
  if (const auto* a = std::get_if<AtomicConstraint>(&c)) {
    // Alpha-rename binders fresh for the solution, then test entailment
    // of the substituted requirement.
    Assertion env = a->env;
    Condition cond = a->cond;
    NameSet avoid = names_of(s.subst);
    collect_support(s.assertion, avoid);
    collect_support(env, avoid);
    collect_support(cond, avoid);
    NameSeq binders = a->binders;
    for (Name b : binders) avoid.insert(b);
    for (std::size_t i = 0; i < binders.size(); ++i) {
      Name b = binders[i];
      bool clash = names_of(s.subst).count(b) || support(s.assertion).count(b);
      if (!clash) continue;
      Name nb = freshen(b, avoid);
      avoid.insert(nb);
      env = swap(b, nb, env);
      cond = swap(b, nb, cond);
      for (std::size_t j = i; j < binders.size(); ++j)
        binders[j] = swap_name(b, nb, binders[j]);
    }
    return inst.entails(compose(apply(s.subst, env), s.assertion), apply(s.subst, cond));
  }
  if (const auto* e = std::get_if<EqConstraint>(&c))
    return apply(s.subst, e->lhs) == apply(s.subst, e->rhs);
  if (const auto* f = std::get_if<FreshConstraint>(&c)) {
    // the substitution does not affect the constrained name, including
    // its occurrences inside the target
    Substitution stripped;
    for (const auto& [k, v] : s.subst.map)
      if (!(k == f->name)) stripped.map.emplace_back(k, v);
    if (const auto* t = std::get_if<Term>(&f->target))
      return is_fresh(f->name, apply(stripped, *t));
    return is_fresh(f->name, psi::apply(stripped, std::get<AgentRef>(f->target)));
  }
  const auto& x = std::get<ExtConstraint>(c);
  for (const Solution& rec : x.sols) {
    if (!(rec.assertion == s.assertion)) continue;
    bool match = true;
    for (const auto& [n, t] : rec.subst.map)
      if (!(s.subst.lookup(n) == t)) {
        match = false;
        break;
      }
    if (match) return true;
  }
  return false;
}

inline bool check_solution(const Instance& inst, const Solution& s, const Constraint& c) {
  for (const Conjunct& j : c.conjuncts)
    if (!check_solution(inst, s, j)) return false;
  return true;
}

template <class T>
NameSet free_names(const T& x) {
  return support(x);
}

// Names a solution substitution may move: free names of the constraint
// minus declared constants and pinned (extruded) names.
inline NameSet solution_targets(const Constraint& c, const DomainConfig& dom,
                                const NameSet& pinned = {}) {
  NameSet t = support(c);
  for (Name n : dom.constants) t.erase(n);
  for (Name n : pinned) t.erase(n);
  return t;
}

// Enumerates all solutions over the finite domain: substitutions map each
// target into the instance's term domain (or leave it in place) and the
// assertion ranges over the assertion domain. Sound and complete relative
// to the domain.
inline std::vector<Solution> solutions(const Instance& inst, const Constraint& c,
                                       const DomainConfig& dom, const NameSet& targets) {
  NameSet pool = dom.names;
  NameSet fn = support(c);
  pool.insert(fn.begin(), fn.end());

  std::vector<Term> base = inst.term_domain(pool, dom);
  std::vector<Name> tg(targets.begin(), targets.end());

  // Extensional conjuncts pin names to recorded values; narrowing the
  // candidate sets to those keeps enumeration tractable and loses no
  // solutions.
  std::map<Name, std::set<Term>> pins;
  for (const Conjunct& j : c.conjuncts) {
    const auto* x = std::get_if<ExtConstraint>(&j);
    if (!x || x->sols.empty()) continue;
    std::map<Name, std::set<Term>> local;
    std::map<Name, std::size_t> bound_count;
    for (const Solution& s : x->sols)
      for (const auto& [k, v] : s.subst.map) {
        local[k].insert(v);
        ++bound_count[k];
      }
    for (auto& [k, vals] : local) {
      if (bound_count[k] != x->sols.size()) continue;  // not pinned by every pair
      auto it = pins.find(k);
      if (it == pins.end()) {
        pins.emplace(k, std::move(vals));
      } else {
        std::set<Term> inter;
        std::set_intersection(it->second.begin(), it->second.end(), vals.begin(), vals.end(),
                              std::inserter(inter, inter.begin()));
        it->second = std::move(inter);
      }
    }
  }

  std::vector<std::vector<Term>> cands(tg.size());
  for (std::size_t i = 0; i < tg.size(); ++i) {
    auto pin = pins.find(tg[i]);
    if (pin != pins.end()) {
      cands[i].assign(pin->second.begin(), pin->second.end());
      if (cands[i].empty()) return {};
      continue;
    }
    cands[i] = base;
    cands[i].push_back(Term::mk_name(tg[i]));
    std::sort(cands[i].begin(), cands[i].end());
    cands[i].erase(std::unique(cands[i].begin(), cands[i].end()), cands[i].end());
  }
  std::vector<Assertion> asserts = inst.assertion_domain(dom.names, dom);

  std::vector<Solution> out;
  std::vector<std::size_t> idx(tg.size(), 0);
  for (;;) {
    Substitution sub;
    for (std::size_t i = 0; i < tg.size(); ++i) sub.map.emplace_back(tg[i], cands[i][idx[i]]);
    for (const Assertion& a : asserts) {
      Solution s{sub, a};
      if (check_solution(inst, s, c)) out.push_back(s);
    }
    std::size_t i = 0;
    for (; i < tg.size(); ++i) {
      if (++idx[i] < cands[i].size()) break;
      idx[i] = 0;
    }
    if (i == tg.size()) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Solution> solutions(const Instance& inst, const Constraint& c,
                                       const DomainConfig& dom) {
  return solutions(inst, c, dom, solution_targets(c, dom));
}

// sol(C) subseteq sol(D), relative to the domain.
inline bool implies(const Instance& inst, const Constraint& c, const Constraint& d,
                    const DomainConfig& dom, const NameSet& pinned = {}) {
  NameSet targets = solution_targets(c, dom, pinned);
  NameSet td = solution_targets(d, dom, pinned);
  targets.insert(td.begin(), td.end());
  for (const Solution& s : solutions(inst, c, dom, targets))
    if (!check_solution(inst, s, d)) return false;
  return true;
}

// Every solution of C solves some member of the disjunction; the empty
// disjunction covers exactly the unsatisfiable C.
inline bool implies_disjunction(const Instance& inst, const Constraint& c,
                                const std::vector<Constraint>& ds, const DomainConfig& dom,
                                const NameSet& pinned = {}) {
  NameSet targets = solution_targets(c, dom, pinned);
  for (const Constraint& d : ds) {
    NameSet td = solution_targets(d, dom, pinned);
    targets.insert(td.begin(), td.end());
  }
  for (const Solution& s : solutions(inst, c, dom, targets)) {
    bool covered = false;
    for (const Constraint& d : ds)
      if (check_solution(inst, s, d)) {
        covered = true;
        break;
      }
    if (!covered) return false;
  }
  return true;
}

// ---- JSON rendering ----

inline nlohmann::json to_json(const Solution& s) {
  nlohmann::json sub = nlohmann::json::object();
  for (const auto& [k, v] : s.subst.map) sub[display(k)] = print_term(v);
  return nlohmann::json{{"subst", sub}, {"assertion", print_assertion(s.assertion)}};
}

inline nlohmann::json to_json(const Conjunct& c) {
  if (const auto* a = std::get_if<AtomicConstraint>(&c)) {
    nlohmann::json nu = nlohmann::json::array();
    for (Name b : a->binders) nu.push_back(display(b));
    return nlohmann::json{{"nu", nu},
                          {"env", print_assertion(a->env)},
                          {"cond", print_condition(a->cond)}};
  }
  if (const auto* e = std::get_if<EqConstraint>(&c))
    return nlohmann::json{{"eq", {print_term(e->lhs), print_term(e->rhs)}}};
  if (const auto* f = std::get_if<FreshConstraint>(&c)) {
    std::string t = std::holds_alternative<Term>(f->target)
                        ? print_term(std::get<Term>(f->target))
                        : print_agent(std::get<AgentRef>(f->target));
    return nlohmann::json{{"fresh", {display(f->name), t}}};
  }
  const auto& x = std::get<ExtConstraint>(c);
  nlohmann::json sols = nlohmann::json::array();
  for (const Solution& s : x.sols) sols.push_back(to_json(s));
  return nlohmann::json{{"sols", sols}};
}

inline nlohmann::json to_json(const Constraint& c) {
  if (c.conjuncts.size() == 1) return to_json(c.conjuncts[0]);
  nlohmann::json parts = nlohmann::json::array();
  for (const Conjunct& j : c.conjuncts) parts.push_back(to_json(j));
  return nlohmann::json{{"and", parts}};
}

}  // namespace psi

#endif  // PSI_CONSTRAINTS_HPP

#ifndef PSI_INSTANCES_HPP
#define PSI_INSTANCES_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "psi/instance.hpp"

namespace psi {

namespace detail {

// Union-find over term atoms, seeded from an assertion's bindings. Each
// atom is also linked to its normal form, so entailment sees through the
// instance's rewrite rules at the atom level. Composition only ever adds
// edges, which keeps every entailment built on this monotone.
class TermClasses {
 public:
  TermClasses(const Assertion& psi, std::function<Term(const Term&)> norm)
      : norm_(std::move(norm)) {
    for (const Binding& b : psi.binds)
      unite(id(Term::mk_name(b.var)), id(b.value));
  }

  bool related(const Term& a, const Term& b) { return find(id(a)) == find(id(b)); }

  bool class_has_name(const Term& a) {
    int r = find(id(a));
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (find(int(i)) == r && atoms_[i].is_name()) return true;
    return false;
  }

  std::set<long long> class_literals(const Term& a) {
    std::set<long long> out;
    int r = find(id(a));
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (find(int(i)) == r && atoms_[i].kind == Term::Kind::literal) out.insert(atoms_[i].lit);
    return out;
  }

 private:
  int id(const Term& t) {
    auto it = index_.find(t);
    if (it != index_.end()) return it->second;
    int i = int(atoms_.size());
    atoms_.push_back(t);
    parent_.push_back(i);
    index_.emplace(t, i);
    Term n = norm_(t);
    if (!(n == t)) unite(i, id(n));
    return i;
  }
  int find(int i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(int a, int b) { parent_[find(a)] = find(b); }

  std::function<Term(const Term&)> norm_;
  std::map<Term, int> index_;
  std::vector<Term> atoms_;
  std::vector<int> parent_;
};

inline Term identity_norm(const Term& t) { return t; }

// dec(enc(M,K),K) -> M, innermost to fixpoint.
inline Term crypto_norm(const Term& t) {
  if (t.kind != Term::Kind::app) return t;
  std::vector<Term> as;
  as.reserve(t.args.size());
  for (const Term& a : t.args) as.push_back(crypto_norm(a));
  if (t.sym == "dec" && as.size() == 2 && as[0].kind == Term::Kind::app &&
      as[0].sym == "enc" && as[0].args.size() == 2 && as[0].args[1] == as[1])
    return as[0].args[0];
  return Term::mk_app(t.sym, std::move(as));
}

// All variants of t reachable by expanding bound names; each path bans
// re-expanding a name inside its own expansion, so cyclic bindings
// terminate. Results are capped defensively but desk-scale inputs stay
// tiny.
inline void expand_rec(const Assertion& psi, const Term& t, NameSet banned,
                       std::set<Term>& out, std::size_t cap) {
  if (out.size() > cap) return;
  switch (t.kind) {
    case Term::Kind::literal:
      out.insert(t);
      return;
    case Term::Kind::name: {
      out.insert(t);
      if (banned.count(t.name)) return;
      NameSet b2 = banned;
      b2.insert(t.name);
      for (const Binding& bind : psi.binds)
        if (bind.var == t.name) expand_rec(psi, bind.value, b2, out, cap);
      return;
    }
    case Term::Kind::app: {
      std::vector<std::set<Term>> parts(t.args.size());
      for (std::size_t i = 0; i < t.args.size(); ++i)
        expand_rec(psi, t.args[i], banned, parts[i], cap);
      std::vector<Term> acc;
      std::function<void(std::size_t, std::vector<Term>&)> build =
          [&](std::size_t i, std::vector<Term>& picked) {
            if (out.size() > cap) return;
            if (i == t.args.size()) {
              out.insert(Term::mk_app(t.sym, picked));
              return;
            }
            for (const Term& p : parts[i]) {
              picked.push_back(p);
              build(i + 1, picked);
              picked.pop_back();
            }
          };
      build(0, acc);
      return;
    }
  }
}

inline std::set<Term> normalized_expansions(const Assertion& psi, const Term& t,
                                            const std::function<Term(const Term&)>& norm) {
  std::set<Term> raw;
  expand_rec(psi, t, {}, raw, 4096);
  std::set<Term> out;
  for (const Term& r : raw) out.insert(norm(r));
  return out;
}

inline bool sets_intersect(const std::set<Term>& a, const std::set<Term>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else
      return true;
  }
  return false;
}

inline std::vector<Term> names_as_terms(const NameSet& pool) {
  std::vector<Term> out;
  out.reserve(pool.size());
  for (Name n : pool) out.push_back(Term::mk_name(n));
  return out;
}

}  // namespace detail

// ---- pi: terms are names, the only assertion is 1 ----

class PiInstance : public Instance {
 public:
  std::string key() const override { return "pi"; }

  bool term_allowed(const Term& t) const override { return t.is_name(); }

  bool entails(const Assertion&, const Condition& c) const override {
    switch (c.kind) {
      case Condition::Kind::eq: return c.lhs == c.rhs;
      case Condition::Kind::neq: return !(c.lhs == c.rhs);
      case Condition::Kind::chan_eq: return c.lhs.is_name() && c.lhs == c.rhs;
    }
    return false;
  }

  std::vector<Term> term_domain(const NameSet& pool, const DomainConfig&) const override {
    return detail::names_as_terms(pool);
  }

  std::vector<Condition> probe_conditions(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    std::vector<Condition> out;
    auto ts = term_domain(pool, dom);
    for (const Term& m : ts)
      for (const Term& n : ts) {
        out.push_back(mk_eq(m, n));
        out.push_back(mk_neq(m, n));
        out.push_back(chan_eq(m, n));
      }
    return out;
  }

  std::vector<Term> channel_candidates(const Assertion&, const Term& m, const NameSet&,
                                       const DomainConfig&) const override {
    if (m.is_name()) return {m};
    return {};
  }
};

// ---- pi extended with a constant F that is not a channel ----

class PiNonchanInstance : public Instance {
 public:
  std::string key() const override { return "pi-nonchan"; }

  bool term_allowed(const Term& t) const override {
    return t.is_name() || (t.kind == Term::Kind::app && t.sym == "F" && t.args.empty());
  }

  const std::map<std::string, int>& functors() const override {
    static const std::map<std::string, int> fs = {{"F", 0}};
    return fs;
  }

  bool entails(const Assertion&, const Condition& c) const override {
    switch (c.kind) {
      case Condition::Kind::eq: return c.lhs == c.rhs;
      case Condition::Kind::neq: return !(c.lhs == c.rhs);
      case Condition::Kind::chan_eq:
        return c.lhs.is_name() && c.rhs.is_name() && c.lhs == c.rhs;
    }
    return false;
  }

  std::vector<Term> term_domain(const NameSet& pool, const DomainConfig&) const override {
    std::vector<Term> out = detail::names_as_terms(pool);
    out.push_back(Term::mk_app("F", {}));
    return out;
  }

  std::vector<Condition> probe_conditions(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    std::vector<Condition> out;
    auto ts = term_domain(pool, dom);
    for (const Term& m : ts)
      for (const Term& n : ts) {
        out.push_back(mk_eq(m, n));
        out.push_back(mk_neq(m, n));
        out.push_back(chan_eq(m, n));
      }
    return out;
  }

  std::vector<Term> channel_candidates(const Assertion&, const Term& m, const NameSet&,
                                       const DomainConfig&) const override {
    if (m.is_name()) return {m};
    return {};
  }
};

// ---- tuple: channels with projection, first(M,N) <-> M ----

class TupleInstance : public Instance {
 public:
  std::string key() const override { return "tuple"; }

  bool term_allowed(const Term& t) const override {
    switch (t.kind) {
      case Term::Kind::name: return true;
      case Term::Kind::literal: return false;
      case Term::Kind::app:
        return t.sym == "first" && t.args.size() == 2 && term_allowed(t.args[0]) &&
               term_allowed(t.args[1]);
    }
    return false;
  }

  bool condition_allowed(const Condition& c) const override {
    return c.kind != Condition::Kind::neq && term_allowed(c.lhs) && term_allowed(c.rhs);
  }

  const std::map<std::string, int>& functors() const override {
    static const std::map<std::string, int> fs = {{"first", 2}};
    return fs;
  }

  // The channel root: first(M,N) names the same channel as M.
  static Term root(const Term& t) {
    if (t.kind == Term::Kind::app && t.sym == "first" && t.args.size() == 2)
      return root(t.args[0]);
    return t;
  }

  bool entails(const Assertion&, const Condition& c) const override {
    switch (c.kind) {
      case Condition::Kind::eq: return c.lhs == c.rhs;
      case Condition::Kind::neq: return false;
      case Condition::Kind::chan_eq: return root(c.lhs) == root(c.rhs);
    }
    return false;
  }

  std::vector<Term> term_domain(const NameSet& pool, const DomainConfig& dom) const override {
    std::vector<Term> layer = detail::names_as_terms(pool);
    std::vector<Term> all = layer;
    for (int d = 0; d < dom.term_depth; ++d) {
      std::vector<Term> next;
      for (const Term& m : all)
        for (const Term& n : all) {
          Term t = Term::mk_app("first", {m, n});
          if (t.depth() == d + 1) next.push_back(t);
        }
      all.insert(all.end(), next.begin(), next.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }

  std::vector<Condition> probe_conditions(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    DomainConfig d = dom;
    d.term_depth = dom.probe_depth;
    std::vector<Condition> out;
    auto ts = term_domain(pool, d);
    for (const Term& m : ts)
      for (const Term& n : ts) {
        out.push_back(mk_eq(m, n));
        out.push_back(chan_eq(m, n));
      }
    return out;
  }
};

// ---- assign: integers and variable assignments ----

class AssignInstance : public Instance {
 public:
  std::string key() const override { return "assign"; }

  bool term_allowed(const Term& t) const override {
    return t.is_name() || t.kind == Term::Kind::literal;
  }

  bool assertions_allowed() const override { return true; }

  bool entails(const Assertion& psi, const Condition& c) const override {
    detail::TermClasses cls(psi, detail::identity_norm);
    switch (c.kind) {
      case Condition::Kind::eq:
        return cls.related(c.lhs, c.rhs);
      case Condition::Kind::neq: {
        // Provably distinct: each side's class contains a literal and
        // some pair of them differs. Stable under composition.
        auto ls = cls.class_literals(c.lhs);
        auto rs = cls.class_literals(c.rhs);
        for (long long l : ls)
          for (long long r : rs)
            if (l != r) return true;
        return false;
      }
      case Condition::Kind::chan_eq:
        return cls.related(c.lhs, c.rhs);
    }
    return false;
  }

  Term evaluate(const Assertion& psi, const Term& t) const override {
    detail::TermClasses cls(psi, detail::identity_norm);
    for (const Binding& b : psi.binds) {
      cls.related(Term::mk_name(b.var), b.value);  // ensure atoms present
    }
    auto lits = cls.class_literals(t);
    if (!lits.empty()) return Term::mk_lit(*lits.begin());
    return t;
  }

  std::vector<Term> term_domain(const NameSet& pool, const DomainConfig& dom) const override {
    std::vector<Term> out = detail::names_as_terms(pool);
    for (long long v : dom.literals) out.push_back(Term::mk_lit(v));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<Condition> probe_conditions(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    std::vector<Condition> out;
    auto ts = term_domain(pool, dom);
    for (const Term& m : ts)
      for (const Term& n : ts) {
        out.push_back(mk_eq(m, n));
        out.push_back(mk_neq(m, n));
        out.push_back(chan_eq(m, n));
      }
    return out;
  }

  std::vector<Assertion> assertion_domain(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    std::vector<Binding> all;
    for (Name v : pool) {
      for (Name w : pool)
        if (!(w == v)) all.push_back(Binding{v, Term::mk_name(w)});
      for (long long l : dom.literals) all.push_back(Binding{v, Term::mk_lit(l)});
    }
    std::vector<Assertion> out = {Assertion::unit()};
    std::vector<std::vector<Binding>> layer = {{}};
    for (int d = 0; d < dom.assert_depth; ++d) {
      std::vector<std::vector<Binding>> next;
      for (const auto& base : layer)
        for (const Binding& b : all) {
          if (!base.empty() && !(base.back() < b)) continue;  // ordered combos
          auto ext = base;
          ext.push_back(b);
          out.push_back(mk_assertion(ext));
          next.push_back(std::move(ext));
        }
      layer = std::move(next);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

// ---- crypto: symmetric encryption with dec(enc(M,k),k) = M ----

class CryptoInstance : public Instance {
 public:
  std::string key() const override { return "crypto"; }

  bool term_allowed(const Term& t) const override {
    switch (t.kind) {
      case Term::Kind::name: return true;
      case Term::Kind::literal: return false;
      case Term::Kind::app:
        return (t.sym == "enc" || t.sym == "dec") && t.args.size() == 2 &&
               term_allowed(t.args[0]) && term_allowed(t.args[1]);
    }
    return false;
  }

  bool condition_allowed(const Condition& c) const override {
    return c.kind != Condition::Kind::neq && term_allowed(c.lhs) && term_allowed(c.rhs);
  }

  bool assertions_allowed() const override { return true; }

  const std::map<std::string, int>& functors() const override {
    static const std::map<std::string, int> fs = {{"enc", 2}, {"dec", 2}};
    return fs;
  }

  bool entails(const Assertion& psi, const Condition& c) const override {
    switch (c.kind) {
      case Condition::Kind::eq: {
        auto ls = detail::normalized_expansions(psi, c.lhs, detail::crypto_norm);
        auto rs = detail::normalized_expansions(psi, c.rhs, detail::crypto_norm);
        return detail::sets_intersect(ls, rs);
      }
      case Condition::Kind::neq:
        return false;
      case Condition::Kind::chan_eq: {
        detail::TermClasses cls(psi, detail::crypto_norm);
        return cls.related(c.lhs, c.rhs) && cls.class_has_name(c.lhs);
      }
    }
    return false;
  }

  Term evaluate(const Assertion& psi, const Term& t) const override {
    // Expand acyclically bound names, then rewrite. Names on a binding
    // cycle are left symbolic so evaluation stays idempotent.
    return detail::crypto_norm(full_expand(psi, t, {}));
  }

  std::vector<Term> term_domain(const NameSet& pool, const DomainConfig& dom) const override {
    std::vector<Term> all = detail::names_as_terms(pool);
    for (int d = 0; d < dom.term_depth; ++d) {
      std::vector<Term> next;
      for (const Term& m : all)
        for (const Term& n : all) {
          for (const char* f : {"enc", "dec"}) {
            Term t = Term::mk_app(f, {m, n});
            if (t.depth() == d + 1) next.push_back(t);
          }
        }
      all.insert(all.end(), next.begin(), next.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }

  std::vector<Condition> probe_conditions(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    DomainConfig d = dom;
    d.term_depth = dom.probe_depth;
    std::vector<Condition> out;
    auto ts = term_domain(pool, d);
    for (const Term& m : ts)
      for (const Term& n : ts) out.push_back(mk_eq(m, n));
    for (Name a : pool)
      for (Name b : pool) out.push_back(chan_eq(Term::mk_name(a), Term::mk_name(b)));
    return out;
  }

  std::vector<Assertion> assertion_domain(const NameSet& pool,
                                          const DomainConfig& dom) const override {
    std::vector<Assertion> out = {Assertion::unit()};
    if (dom.assert_depth >= 1) {
      DomainConfig d = dom;
      d.term_depth = 1;
      auto values = term_domain(pool, d);
      for (Name v : pool)
        for (const Term& t : values) {
          if (t.is_name() && t.name == v) continue;
          out.push_back(mk_assertion({Binding{v, t}}));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  Term full_expand(const Assertion& psi, const Term& t, NameSet seen) const {
    switch (t.kind) {
      case Term::Kind::literal: return t;
      case Term::Kind::name: {
        if (seen.count(t.name)) return t;
        for (const Binding& b : psi.binds)
          if (b.var == t.name) {
            if (cyclic(psi, t.name)) return t;
            NameSet s2 = seen;
            s2.insert(t.name);
            return full_expand(psi, b.value, s2);
          }
        return t;
      }
      case Term::Kind::app: {
        std::vector<Term> as;
        as.reserve(t.args.size());
        for (const Term& a : t.args) as.push_back(full_expand(psi, a, seen));
        return Term::mk_app(t.sym, std::move(as));
      }
    }
    return t;
  }

  bool cyclic(const Assertion& psi, Name start) const {
    NameSet seen;
    std::vector<Name> stack = {start};
    while (!stack.empty()) {
      Name n = stack.back();
      stack.pop_back();
      for (const Binding& b : psi.binds)
        if (b.var == n) {
          NameSet vs = support(b.value);
          if (vs.count(start)) return true;
          for (Name m : vs)
            if (seen.insert(m).second) stack.push_back(m);
        }
    }
    return false;
  }
};

// ---- registry ----

inline const Instance& registry_lookup(const std::string& key) {
  static const PiInstance pi;
  static const PiNonchanInstance nonchan;
  static const TupleInstance tuple;
  static const AssignInstance assign;
  static const CryptoInstance crypto;
  if (key == "pi") return pi;
  if (key == "pi-nonchan") return nonchan;
  if (key == "tuple") return tuple;
  if (key == "assign") return assign;
  if (key == "crypto") return crypto;
  throw unknown_instance("unknown instance: " + key);
}

inline std::vector<std::string> registry_keys() {
  return {"pi", "pi-nonchan", "tuple", "assign", "crypto"};
}

}  // namespace psi

#endif  // PSI_INSTANCES_HPP

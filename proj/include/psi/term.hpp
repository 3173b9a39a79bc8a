#ifndef PSI_TERM_HPP
#define PSI_TERM_HPP

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "psi/names.hpp"

namespace psi {

// First-order data terms shared by all calculus instances: names, integer
// literals, and constructor applications. Which functors are legal is the
// instance's business, not the term's.
struct Term {
  enum class Kind { name, literal, app };

  Kind kind = Kind::name;
  Name name{};
  long long lit = 0;
  std::string sym;
  std::vector<Term> args;

  static Term mk_name(Name n) {
    Term t;
    t.kind = Kind::name;
    t.name = n;
    return t;
  }
  static Term mk_lit(long long v) {
    Term t;
    t.kind = Kind::literal;
    t.lit = v;
    return t;
  }
  static Term mk_app(std::string f, std::vector<Term> as) {
    Term t;
    t.kind = Kind::app;
    t.sym = std::move(f);
    t.args = std::move(as);
    return t;
  }

  bool is_name() const { return kind == Kind::name; }

  friend bool operator==(const Term& a, const Term& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::name: return a.name == b.name;
      case Kind::literal: return a.lit == b.lit;
      case Kind::app: return a.sym == b.sym && a.args == b.args;
    }
    return false;
  }
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    switch (a.kind) {
      case Kind::name: return a.name < b.name;
      case Kind::literal: return a.lit < b.lit;
      case Kind::app:
        return std::tie(a.sym, a.args) < std::tie(b.sym, b.args);
    }
    return false;
  }

  int depth() const {
    if (kind != Kind::app) return 0;
    int d = 0;
    for (const Term& a : args) d = std::max(d, a.depth());
    return d + 1;
  }
};

inline std::string print_term(const Term& t) {
  switch (t.kind) {
    case Term::Kind::name: return display(t.name);
    case Term::Kind::literal: return std::to_string(t.lit);
    case Term::Kind::app: {
      std::string s = t.sym;
      if (t.args.empty()) return s;
      s += "(";
      for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) s += ",";
        s += print_term(t.args[i]);
      }
      s += ")";
      return s;
    }
  }
  return "?";
}

// Conditions: equality, inequality, and channel equivalence between terms.
struct Condition {
  enum class Kind { eq, neq, chan_eq };
  Kind kind = Kind::eq;
  Term lhs, rhs;

  friend bool operator==(const Condition& a, const Condition& b) {
    return a.kind == b.kind && a.lhs == b.lhs && a.rhs == b.rhs;
  }
  friend bool operator<(const Condition& a, const Condition& b) {
    return std::tie(a.kind, a.lhs, a.rhs) < std::tie(b.kind, b.lhs, b.rhs);
  }
};

inline Condition mk_eq(Term l, Term r) { return Condition{Condition::Kind::eq, std::move(l), std::move(r)}; }
inline Condition mk_neq(Term l, Term r) { return Condition{Condition::Kind::neq, std::move(l), std::move(r)}; }
inline Condition chan_eq(Term l, Term r) { return Condition{Condition::Kind::chan_eq, std::move(l), std::move(r)}; }

inline std::string print_condition(const Condition& c) {
  const char* op = c.kind == Condition::Kind::eq ? "=" : c.kind == Condition::Kind::neq ? "<>" : "<->";
  return print_term(c.lhs) + op + print_term(c.rhs);
}

// Assertions: a canonical (sorted, deduplicated) set of bindings x:=M.
// The unit assertion is the empty set; composition is set union, which
// makes the abelian monoid laws hold on the nose.
struct Binding {
  Name var;
  Term value;
  friend bool operator==(const Binding& a, const Binding& b) {
    return a.var == b.var && a.value == b.value;
  }
  friend bool operator<(const Binding& a, const Binding& b) {
    return std::tie(a.var, a.value) < std::tie(b.var, b.value);
  }
};

struct Assertion {
  std::vector<Binding> binds;  // sorted, unique

  static Assertion unit() { return Assertion{}; }
  bool is_unit() const { return binds.empty(); }

  void normalize() {
    std::sort(binds.begin(), binds.end());
    binds.erase(std::unique(binds.begin(), binds.end()), binds.end());
  }

  friend bool operator==(const Assertion& a, const Assertion& b) { return a.binds == b.binds; }
  friend bool operator<(const Assertion& a, const Assertion& b) { return a.binds < b.binds; }
};

inline Assertion mk_assertion(std::vector<Binding> bs) {
  Assertion a{std::move(bs)};
  a.normalize();
  return a;
}

inline Assertion compose(const Assertion& a, const Assertion& b) {
  Assertion r = a;
  r.binds.insert(r.binds.end(), b.binds.begin(), b.binds.end());
  r.normalize();
  return r;
}

inline std::string print_assertion(const Assertion& a) {
  if (a.is_unit()) return "1";
  std::string s;
  for (std::size_t i = 0; i < a.binds.size(); ++i) {
    if (i) s += ",";
    s += display(a.binds[i].var) + ":=" + print_term(a.binds[i].value);
  }
  return s;
}

// ---- swapping and support ----

inline Term swap(Name a, Name b, const Term& t) {
  switch (t.kind) {
    case Term::Kind::name: return Term::mk_name(swap_name(a, b, t.name));
    case Term::Kind::literal: return t;
    case Term::Kind::app: {
      std::vector<Term> as;
      as.reserve(t.args.size());
      for (const Term& x : t.args) as.push_back(swap(a, b, x));
      return Term::mk_app(t.sym, std::move(as));
    }
  }
  return t;
}

inline Condition swap(Name a, Name b, const Condition& c) {
  return Condition{c.kind, swap(a, b, c.lhs), swap(a, b, c.rhs)};
}

inline Assertion swap(Name a, Name b, const Assertion& p) {
  std::vector<Binding> bs;
  bs.reserve(p.binds.size());
  for (const Binding& x : p.binds)
    bs.push_back(Binding{swap_name(a, b, x.var), swap(a, b, x.value)});
  return mk_assertion(std::move(bs));
}

inline void collect_support(const Term& t, NameSet& out) {
  switch (t.kind) {
    case Term::Kind::name: out.insert(t.name); break;
    case Term::Kind::literal: break;
    case Term::Kind::app:
      for (const Term& a : t.args) collect_support(a, out);
      break;
  }
}

inline void collect_support(const Condition& c, NameSet& out) {
  collect_support(c.lhs, out);
  collect_support(c.rhs, out);
}

inline void collect_support(const Assertion& p, NameSet& out) {
  for (const Binding& b : p.binds) {
    out.insert(b.var);
    collect_support(b.value, out);
  }
}

template <class T>
NameSet support(const T& x) {
  NameSet s;
  collect_support(x, s);
  return s;
}

template <class T>
bool is_fresh(Name a, const T& x) {
  return !support(x).count(a);
}

// ---- substitution ----

struct substitution_error : error {
  using error::error;
};

// Simultaneous substitution of terms for names. Stored sorted; identity
// entries are allowed and meaningful (they pin a name in extensional
// constraint solutions).
struct Substitution {
  std::vector<std::pair<Name, Term>> map;  // sorted by name

  Substitution() = default;
  Substitution(const NameSeq& names, const std::vector<Term>& values) {
    if (names.size() != values.size()) throw substitution_error("substitution: length mismatch");
    if (has_duplicates(names)) throw substitution_error("substitution: duplicate domain name");
    for (std::size_t i = 0; i < names.size(); ++i) map.emplace_back(names[i], values[i]);
    std::sort(map.begin(), map.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  bool domain_contains(Name n) const {
    for (const auto& [k, v] : map)
      if (k == n) return true;
    return false;
  }

  Term lookup(Name n) const {
    for (const auto& [k, v] : map)
      if (k == n) return v;
    return Term::mk_name(n);
  }

  bool is_identity() const {
    for (const auto& [k, v] : map)
      if (!(v.is_name() && v.name == k)) return false;
    return true;
  }

  friend bool operator==(const Substitution& a, const Substitution& b) { return a.map == b.map; }
  friend bool operator<(const Substitution& a, const Substitution& b) { return a.map < b.map; }
};

inline NameSet names_of(const Substitution& s) {
  NameSet out;
  for (const auto& [k, v] : s.map) {
    out.insert(k);
    collect_support(v, out);
  }
  return out;
}

// Support of a substitution: names it moves plus names it introduces.
inline void collect_support(const Substitution& s, NameSet& out) {
  for (const auto& [k, v] : s.map) {
    if (v.is_name() && v.name == k) continue;
    out.insert(k);
    collect_support(v, out);
  }
}

inline Term apply(const Substitution& s, const Term& t) {
  switch (t.kind) {
    case Term::Kind::name: return s.lookup(t.name);
    case Term::Kind::literal: return t;
    case Term::Kind::app: {
      std::vector<Term> as;
      as.reserve(t.args.size());
      for (const Term& x : t.args) as.push_back(apply(s, x));
      return Term::mk_app(t.sym, std::move(as));
    }
  }
  return t;
}

inline Condition apply(const Substitution& s, const Condition& c) {
  return Condition{c.kind, apply(s, c.lhs), apply(s, c.rhs)};
}

// Binding left-hand sides are name positions: substituting a non-name
// term there is rejected.
inline Assertion apply(const Substitution& s, const Assertion& p) {
  std::vector<Binding> bs;
  bs.reserve(p.binds.size());
  for (const Binding& b : p.binds) {
    Term lhs = s.lookup(b.var);
    if (!lhs.is_name())
      throw substitution_error("substitution maps assignment variable " + display(b.var) +
                               " to non-name term " + print_term(lhs));
    bs.push_back(Binding{lhs.name, apply(s, b.value)});
  }
  return mk_assertion(std::move(bs));
}

inline Substitution swap(Name a, Name b, const Substitution& s) {
  Substitution r;
  for (const auto& [k, v] : s.map) r.map.emplace_back(swap_name(a, b, k), swap(a, b, v));
  std::sort(r.map.begin(), r.map.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  return r;
}

inline std::string print_substitution(const Substitution& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.map.size(); ++i) {
    if (i) out += ",";
    out += print_term(s.map[i].second) + "/" + display(s.map[i].first);
  }
  return out + "]";
}

}  // namespace psi

#endif  // PSI_TERM_HPP

#ifndef PSI_AGENT_HPP
#define PSI_AGENT_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "psi/term.hpp"

namespace psi {

struct Agent;
using AgentRef = std::shared_ptr<const Agent>;

struct OutputNode {
  Term subject;
  Term object;
  AgentRef cont;
};
struct InputNode {
  Term subject;
  Name binder;  // binds into cont
  AgentRef cont;
};
struct CaseBranch {
  Condition cond;
  AgentRef body;
};
struct CaseNode {
  std::vector<CaseBranch> branches;
};
struct RestrictionNode {
  Name name;  // binds into body
  AgentRef body;
};
struct ParallelNode {
  AgentRef left, right;
};
struct ReplicationNode {
  AgentRef body;
};
struct AssertionNode {
  Assertion psi;
};

struct Agent {
  std::variant<OutputNode, InputNode, CaseNode, RestrictionNode, ParallelNode,
               ReplicationNode, AssertionNode>
      node;
};

template <class N>
AgentRef mk(N node) {
  return std::make_shared<const Agent>(Agent{std::move(node)});
}

inline AgentRef mk_output(Term subj, Term obj, AgentRef cont) {
  return mk(OutputNode{std::move(subj), std::move(obj), std::move(cont)});
}
inline AgentRef mk_input(Term subj, Name binder, AgentRef cont) {
  return mk(InputNode{std::move(subj), binder, std::move(cont)});
}
inline AgentRef mk_case(std::vector<CaseBranch> branches) {
  return mk(CaseNode{std::move(branches)});
}
inline AgentRef mk_restriction(Name n, AgentRef body) {
  return mk(RestrictionNode{n, std::move(body)});
}
inline AgentRef mk_parallel(AgentRef l, AgentRef r) {
  return mk(ParallelNode{std::move(l), std::move(r)});
}
inline AgentRef mk_replication(AgentRef body) {
  return mk(ReplicationNode{std::move(body)});
}
inline AgentRef mk_assertion_agent(Assertion psi) {
  return mk(AssertionNode{std::move(psi)});
}
// 0 is the unit assertion agent.
inline AgentRef nil() { return mk_assertion_agent(Assertion::unit()); }

inline bool is_nil(const AgentRef& p) {
  const auto* a = std::get_if<AssertionNode>(&p->node);
  return a && a->psi.is_unit();
}

// ---- swapping / support ----

inline AgentRef swap(Name a, Name b, const AgentRef& p) {
  return std::visit(
      [&](const auto& n) -> AgentRef {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>)
          return mk_output(swap(a, b, n.subject), swap(a, b, n.object), swap(a, b, n.cont));
        else if constexpr (std::is_same_v<T, InputNode>)
          return mk_input(swap(a, b, n.subject), swap_name(a, b, n.binder), swap(a, b, n.cont));
        else if constexpr (std::is_same_v<T, CaseNode>) {
          std::vector<CaseBranch> bs;
          bs.reserve(n.branches.size());
          for (const CaseBranch& br : n.branches)
            bs.push_back(CaseBranch{swap(a, b, br.cond), swap(a, b, br.body)});
          return mk_case(std::move(bs));
        } else if constexpr (std::is_same_v<T, RestrictionNode>)
          return mk_restriction(swap_name(a, b, n.name), swap(a, b, n.body));
        else if constexpr (std::is_same_v<T, ParallelNode>)
          return mk_parallel(swap(a, b, n.left), swap(a, b, n.right));
        else if constexpr (std::is_same_v<T, ReplicationNode>)
          return mk_replication(swap(a, b, n.body));
        else
          return mk_assertion_agent(swap(a, b, n.psi));
      },
      p->node);
}

inline void collect_support(const AgentRef& p, NameSet& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>) {
          collect_support(n.subject, out);
          collect_support(n.object, out);
          collect_support(n.cont, out);
        } else if constexpr (std::is_same_v<T, InputNode>) {
          collect_support(n.subject, out);
          NameSet inner;
          collect_support(n.cont, inner);
          inner.erase(n.binder);
          out.insert(inner.begin(), inner.end());
        } else if constexpr (std::is_same_v<T, CaseNode>) {
          for (const CaseBranch& br : n.branches) {
            collect_support(br.cond, out);
            collect_support(br.body, out);
          }
        } else if constexpr (std::is_same_v<T, RestrictionNode>) {
          NameSet inner;
          collect_support(n.body, inner);
          inner.erase(n.name);
          out.insert(inner.begin(), inner.end());
        } else if constexpr (std::is_same_v<T, ParallelNode>) {
          collect_support(n.left, out);
          collect_support(n.right, out);
        } else if constexpr (std::is_same_v<T, ReplicationNode>) {
          collect_support(n.body, out);
        } else {
          collect_support(n.psi, out);
        }
      },
      p->node);
}

// ---- capture-avoiding substitution ----

inline AgentRef apply(const Substitution& s, const AgentRef& p);

namespace detail {
// Renames the binder when the substitution mentions it, either in its
// domain (the entry is shadowed and must not apply below) or in a range
// term (which the binder would capture).
inline std::pair<Name, AgentRef> avoid_capture(Name binder, AgentRef body,
                                               const Substitution& s) {
  bool mentioned = s.domain_contains(binder);
  for (const auto& [k, v] : s.map) {
    if (k == binder) continue;
    if (support(v).count(binder)) mentioned = true;
  }
  if (!mentioned) return {binder, body};
  NameSet avoid = names_of(s);
  collect_support(body, avoid);
  avoid.insert(binder);
  Name fresh = freshen(binder, avoid);
  return {fresh, swap(binder, fresh, body)};
}
}  // namespace detail

inline AgentRef apply(const Substitution& s, const AgentRef& p) {
  if (s.map.empty()) return p;
  return std::visit(
      [&](const auto& n) -> AgentRef {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>)
          return mk_output(apply(s, n.subject), apply(s, n.object), psi::apply(s, n.cont));
        else if constexpr (std::is_same_v<T, InputNode>) {
          auto [b, body] = detail::avoid_capture(n.binder, n.cont, s);
          return mk_input(apply(s, n.subject), b, psi::apply(s, body));
        } else if constexpr (std::is_same_v<T, CaseNode>) {
          std::vector<CaseBranch> bs;
          bs.reserve(n.branches.size());
          for (const CaseBranch& br : n.branches)
            bs.push_back(CaseBranch{apply(s, br.cond), psi::apply(s, br.body)});
          return mk_case(std::move(bs));
        } else if constexpr (std::is_same_v<T, RestrictionNode>) {
          auto [b, body] = detail::avoid_capture(n.name, n.body, s);
          return mk_restriction(b, psi::apply(s, body));
        } else if constexpr (std::is_same_v<T, ParallelNode>)
          return mk_parallel(psi::apply(s, n.left), psi::apply(s, n.right));
        else if constexpr (std::is_same_v<T, ReplicationNode>)
          return mk_replication(psi::apply(s, n.body));
        else
          return mk_assertion_agent(apply(s, n.psi));
      },
      p->node);
}

inline AgentRef agent_substitute(const AgentRef& p, const NameSeq& names,
                                 const std::vector<Term>& values) {
  return psi::apply(Substitution(names, values), p);
}

// ---- alpha equivalence ----

// Binders are renamed to reserved canonical names in traversal order;
// alpha-equivalent agents canonicalize to structurally equal trees.
inline AgentRef canonicalize(const AgentRef& p, std::uint64_t& counter) {
  return std::visit(
      [&](const auto& n) -> AgentRef {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>)
          return mk_output(n.subject, n.object, canonicalize(n.cont, counter));
        else if constexpr (std::is_same_v<T, InputNode>) {
          Name c = NameTable::instance().canon(counter++);
          AgentRef body = swap(n.binder, c, n.cont);
          return mk_input(n.subject, c, canonicalize(body, counter));
        } else if constexpr (std::is_same_v<T, CaseNode>) {
          std::vector<CaseBranch> bs;
          bs.reserve(n.branches.size());
          for (const CaseBranch& br : n.branches)
            bs.push_back(CaseBranch{br.cond, canonicalize(br.body, counter)});
          return mk_case(std::move(bs));
        } else if constexpr (std::is_same_v<T, RestrictionNode>) {
          Name c = NameTable::instance().canon(counter++);
          AgentRef body = swap(n.name, c, n.body);
          return mk_restriction(c, canonicalize(body, counter));
        } else if constexpr (std::is_same_v<T, ParallelNode>)
          return mk_parallel(canonicalize(n.left, counter), canonicalize(n.right, counter));
        else if constexpr (std::is_same_v<T, ReplicationNode>)
          return mk_replication(canonicalize(n.body, counter));
        else
          return mk(AssertionNode{n.psi});
      },
      p->node);
}

inline AgentRef canonical(const AgentRef& p) {
  std::uint64_t c = 0;
  return canonicalize(p, c);
}

inline bool agents_equal(const AgentRef& a, const AgentRef& b);

inline bool agents_equal(const AgentRef& a, const AgentRef& b) {
  if (a->node.index() != b->node.index()) return false;
  if (const auto* x = std::get_if<OutputNode>(&a->node)) {
    const auto& y = std::get<OutputNode>(b->node);
    return x->subject == y.subject && x->object == y.object && agents_equal(x->cont, y.cont);
  }
  if (const auto* x = std::get_if<InputNode>(&a->node)) {
    const auto& y = std::get<InputNode>(b->node);
    return x->subject == y.subject && x->binder == y.binder && agents_equal(x->cont, y.cont);
  }
  if (const auto* x = std::get_if<CaseNode>(&a->node)) {
    const auto& y = std::get<CaseNode>(b->node);
    if (x->branches.size() != y.branches.size()) return false;
    for (std::size_t i = 0; i < x->branches.size(); ++i)
      if (!(x->branches[i].cond == y.branches[i].cond) ||
          !agents_equal(x->branches[i].body, y.branches[i].body))
        return false;
    return true;
  }
  if (const auto* x = std::get_if<RestrictionNode>(&a->node)) {
    const auto& y = std::get<RestrictionNode>(b->node);
    return x->name == y.name && agents_equal(x->body, y.body);
  }
  if (const auto* x = std::get_if<ParallelNode>(&a->node)) {
    const auto& y = std::get<ParallelNode>(b->node);
    return agents_equal(x->left, y.left) && agents_equal(x->right, y.right);
  }
  if (const auto* x = std::get_if<ReplicationNode>(&a->node)) {
    const auto& y = std::get<ReplicationNode>(b->node);
    return agents_equal(x->body, y.body);
  }
  return std::get<AssertionNode>(a->node).psi == std::get<AssertionNode>(b->node).psi;
}

inline bool alpha_eq(const AgentRef& a, const AgentRef& b) {
  return agents_equal(canonical(a), canonical(b));
}

// ---- frames ----

// An assertion under a sequence of bound names; alpha-identified.
struct Frame {
  NameSeq binders;
  Assertion assertion;

  static Frame unit() { return Frame{}; }
};

inline void collect_support(const Frame& f, NameSet& out) {
  NameSet inner;
  collect_support(f.assertion, inner);
  for (Name b : f.binders) inner.erase(b);
  out.insert(inner.begin(), inner.end());
}

inline Frame swap(Name a, Name b, const Frame& f) {
  NameSeq bs;
  bs.reserve(f.binders.size());
  for (Name n : f.binders) bs.push_back(swap_name(a, b, n));
  return Frame{std::move(bs), swap(a, b, f.assertion)};
}

// Renames the frame's binders away from the given avoid set.
inline Frame rename_apart(const Frame& f, const NameSet& avoid) {
  Frame r = f;
  NameSet used = avoid;
  collect_support(r.assertion, used);
  for (Name& b : r.binders) used.insert(b);
  for (std::size_t i = 0; i < r.binders.size(); ++i) {
    Name b = r.binders[i];
    if (!avoid.count(b)) continue;
    Name nb = freshen(b, used);
    used.insert(nb);
    r.assertion = swap(b, nb, r.assertion);
    for (std::size_t j = i + 1; j < r.binders.size(); ++j)
      r.binders[j] = swap_name(b, nb, r.binders[j]);
    r.binders[i] = nb;
  }
  return r;
}

inline Frame frame_compose(const Frame& f, const Frame& g) {
  NameSet avoid_f = support(g.assertion);
  for (Name b : g.binders) avoid_f.insert(b);
  Frame fr = rename_apart(f, avoid_f);
  NameSet avoid_g = support(fr.assertion);
  for (Name b : fr.binders) avoid_g.insert(b);
  Frame gr = rename_apart(g, avoid_g);
  Frame out;
  out.binders = fr.binders;
  out.binders.insert(out.binders.end(), gr.binders.begin(), gr.binders.end());
  out.assertion = compose(fr.assertion, gr.assertion);
  return out;
}

inline Frame frame_restrict(Name b, Frame f) {
  // (nu c)(nu b~)Psi with duplicate binders renamed apart.
  for (Name x : f.binders)
    if (x == b) {
      NameSet avoid = support(f.assertion);
      for (Name y : f.binders) avoid.insert(y);
      avoid.insert(b);
      Name nb = freshen(b, avoid);
      f = swap(b, nb, f);
      break;
    }
  f.binders.insert(f.binders.begin(), b);
  return f;
}

inline Frame frame_of(const AgentRef& p) {
  return std::visit(
      [&](const auto& n) -> Frame {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AssertionNode>)
          return Frame{{}, n.psi};
        else if constexpr (std::is_same_v<T, ParallelNode>)
          return frame_compose(frame_of(n.left), frame_of(n.right));
        else if constexpr (std::is_same_v<T, RestrictionNode>)
          return frame_restrict(n.name, frame_of(n.body));
        else
          return Frame::unit();
      },
      p->node);
}

inline std::string print_frame(const Frame& f) {
  if (f.binders.empty()) return print_assertion(f.assertion);
  std::string s = "(new ";
  for (std::size_t i = 0; i < f.binders.size(); ++i) {
    if (i) s += ",";
    s += display(f.binders[i]);
  }
  return s + ")(" + print_assertion(f.assertion) + ")";
}

// ---- guardedness ----

// Collects assertion subterms not under an input or output prefix.
inline void unguarded_assertions(const AgentRef& p, std::vector<AgentRef>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AssertionNode>) {
          out.push_back(p);
        } else if constexpr (std::is_same_v<T, CaseNode>) {
          for (const CaseBranch& br : n.branches) unguarded_assertions(br.body, out);
        } else if constexpr (std::is_same_v<T, RestrictionNode>) {
          unguarded_assertions(n.body, out);
        } else if constexpr (std::is_same_v<T, ParallelNode>) {
          unguarded_assertions(n.left, out);
          unguarded_assertions(n.right, out);
        } else if constexpr (std::is_same_v<T, ReplicationNode>) {
          unguarded_assertions(n.body, out);
        }
        // Input/Output guard everything below them.
      },
      p->node);
}

struct GuardednessViolation {
  AgentRef replication;  // the !P whose body has an unguarded assertion
  AgentRef assertion;
};

inline void check_guarded_rec(const AgentRef& p, std::vector<GuardednessViolation>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, OutputNode>)
          check_guarded_rec(n.cont, out);
        else if constexpr (std::is_same_v<T, InputNode>)
          check_guarded_rec(n.cont, out);
        else if constexpr (std::is_same_v<T, CaseNode>) {
          for (const CaseBranch& br : n.branches) check_guarded_rec(br.body, out);
        } else if constexpr (std::is_same_v<T, RestrictionNode>)
          check_guarded_rec(n.body, out);
        else if constexpr (std::is_same_v<T, ParallelNode>) {
          check_guarded_rec(n.left, out);
          check_guarded_rec(n.right, out);
        } else if constexpr (std::is_same_v<T, ReplicationNode>) {
          std::vector<AgentRef> bad;
          unguarded_assertions(n.body, bad);
          for (const AgentRef& b : bad) out.push_back(GuardednessViolation{p, b});
          check_guarded_rec(n.body, out);
        }
      },
      p->node);
}

inline std::vector<GuardednessViolation> check_guarded(const AgentRef& p) {
  std::vector<GuardednessViolation> out;
  check_guarded_rec(p, out);
  return out;
}

}  // namespace psi

#endif  // PSI_AGENT_HPP

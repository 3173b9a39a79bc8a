#ifndef PSI_SYMBOLIC_HPP
#define PSI_SYMBOLIC_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psi/concrete.hpp"
#include "psi/constraints.hpp"

namespace psi {

// Symbolic actions: like concrete ones, but subjects are always names
// (fresh placeholders for the channel term).
struct SymbolicAction {
  enum class Kind { output, input, tau };
  Kind kind = Kind::tau;
  Name subject;
  NameSeq extruded;  // output
  Term object;       // output
  Name binder;       // input

  static SymbolicAction out(Name y, NameSeq ext, Term obj) {
    SymbolicAction a;
    a.kind = Kind::output;
    a.subject = y;
    a.extruded = std::move(ext);
    a.object = std::move(obj);
    return a;
  }
  static SymbolicAction in(Name y, Name x) {
    SymbolicAction a;
    a.kind = Kind::input;
    a.subject = y;
    a.binder = x;
    return a;
  }
  static SymbolicAction tau() { return SymbolicAction{}; }

  NameSeq bound_names() const {
    if (kind == Kind::output) return extruded;
    if (kind == Kind::input) return {binder};
    return {};
  }
  NameSet names() const {
    NameSet s;
    if (kind == Kind::tau) return s;
    s.insert(subject);
    if (kind == Kind::output) {
      collect_support(object, s);
      for (Name e : extruded) s.insert(e);
    }
    if (kind == Kind::input) s.insert(binder);
    return s;
  }
};

inline std::string print_action(const SymbolicAction& a) {
  switch (a.kind) {
    case SymbolicAction::Kind::tau: return "tau";
    case SymbolicAction::Kind::input:
      return display(a.subject) + "(" + display(a.binder) + ")";
    case SymbolicAction::Kind::output: {
      std::string s = display(a.subject) + "!";
      if (!a.extruded.empty()) {
        s += "(new ";
        for (std::size_t i = 0; i < a.extruded.size(); ++i) {
          if (i) s += ",";
          s += display(a.extruded[i]);
        }
        s += ")";
      }
      return s + print_term(a.object);
    }
  }
  return "?";
}

// The leading subject constraint (nu b~){Psi' |- M <-> y} that the Com
// rule consumes.
struct Anchor {
  NameSeq binders;
  Assertion env;
  Term channel;
  Name subject;
};

struct not_anchored : error {
  using error::error;
};

struct SymbolicTransition {
  Assertion env;
  AgentRef source;
  SymbolicAction action;
  Constraint constraint;  // conjunct 0 is the anchor for non-tau actions
  std::optional<Anchor> anchor;
  AgentRef target;
};

struct SymbolicTransitionSet {
  std::vector<SymbolicTransition> items;
  bool exhausted = false;
};

inline const Anchor& anchor_of(const SymbolicTransition& t) {
  if (!t.anchor) throw not_anchored("tau transitions carry no subject anchor");
  return *t.anchor;
}

inline std::string sym_transition_key(const SymbolicTransition& t) {
  SymbolicAction a = t.action;
  Constraint c = t.constraint;
  AgentRef tgt = t.target;
  auto rename = [&](Name from, Name to) {
    if (a.subject == from) a.subject = to;
    if (a.kind == SymbolicAction::Kind::input) a.binder = swap_name(from, to, a.binder);
    if (a.kind == SymbolicAction::Kind::output) {
      a.object = swap(from, to, a.object);
      for (Name& e : a.extruded) e = swap_name(from, to, e);
    }
    c = swap(from, to, c);
    tgt = swap(from, to, tgt);
  };
  if (a.kind != SymbolicAction::Kind::tau) rename(a.subject, NameTable::instance().canon(200000));
  NameSeq bn = t.action.bound_names();
  for (std::size_t i = 0; i < bn.size(); ++i)
    rename(bn[i], NameTable::instance().canon(100000 + i));
  return print_action(a) + " | " + canonical_print_constraint(c) + " | " + canonical_print(tgt);
}

namespace detail {

struct SymStep {
  SymbolicAction action;
  Constraint constraint;
  std::optional<Anchor> anchor;
  AgentRef target;
};

struct SymbolicEnum {
  const Instance& inst;
  FreshSession& session;
  bool exhausted = false;

  Constraint with_anchor(const Anchor& a) const {
    return mk_atomic(a.binders, a.env, chan_eq(a.channel, Term::mk_name(a.subject)));
  }

  std::vector<SymStep> enumerate(const Assertion& env, const AgentRef& p, int rep_budget) {
    std::vector<SymStep> out;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, OutputNode>) {
            Name y = session.fresh("y");
            Anchor a{{}, env, n.subject, y};
            out.push_back(SymStep{SymbolicAction::out(y, {}, n.object), with_anchor(a), a,
                                  n.cont});
          } else if constexpr (std::is_same_v<T, InputNode>) {
            Name y = session.fresh("y");
            Name x = session.fresh(display(n.binder));
            Anchor a{{}, env, n.subject, y};
            out.push_back(SymStep{SymbolicAction::in(y, x), with_anchor(a), a,
                                  swap(n.binder, x, n.cont)});
          } else if constexpr (std::is_same_v<T, CaseNode>) {
            for (const CaseBranch& br : n.branches)
              for (SymStep s : enumerate(env, br.body, rep_budget)) {
                s.constraint.conjuncts.push_back(AtomicConstraint{{}, env, br.cond});
                out.push_back(std::move(s));
              }
          } else if constexpr (std::is_same_v<T, RestrictionNode>) {
            Name b = session.fresh(display(n.name));
            AgentRef body = swap(n.name, b, n.body);
            for (SymStep& s : enumerate(env, body, rep_budget)) {
              bool in_object = s.action.kind == SymbolicAction::Kind::output &&
                               support(s.action.object).count(b);
              if (in_object) {
                // Open: extrude b, (nu b) wraps the constraint
                SymStep o = s;
                o.action.extruded.push_back(b);
                o.constraint = restrict_name(b, o.constraint);
                if (o.anchor) o.anchor->binders.insert(o.anchor->binders.begin(), b);
                out.push_back(std::move(o));
              } else {
                SymStep o = s;
                o.constraint = restrict_name(b, o.constraint);
                if (o.anchor) o.anchor->binders.insert(o.anchor->binders.begin(), b);
                o.target = mk_restriction(b, o.target);
                out.push_back(std::move(o));
              }
            }
          } else if constexpr (std::is_same_v<T, ParallelNode>) {
            par_steps(env, n.left, n.right, false, rep_budget, out);
            par_steps(env, n.right, n.left, true, rep_budget, out);
            com_steps(env, n.left, n.right, false, rep_budget, out);
            com_steps(env, n.right, n.left, true, rep_budget, out);
          } else if constexpr (std::is_same_v<T, ReplicationNode>) {
            if (rep_budget <= 0) {
              exhausted = true;
            } else {
              auto sub = enumerate(env, mk_parallel(n.body, p), rep_budget - 1);
              out.insert(out.end(), sub.begin(), sub.end());
            }
          } else {
            (void)n;
          }
        },
        p->node);
    return out;
  }

  void par_steps(const Assertion& env, const AgentRef& moving, const AgentRef& still,
                 bool still_on_left, int rep_budget, std::vector<SymStep>& out) {
    Frame fs = session_frame(still, session);
    Assertion premise_env = compose(env, fs.assertion);
    for (SymStep& s : enumerate(premise_env, moving, rep_budget)) {
      // bn(alpha) # still and subj(alpha) # still hold by construction
      SymStep o = s;
      o.constraint = restrict_names(fs.binders, o.constraint);
      if (o.anchor)
        o.anchor->binders.insert(o.anchor->binders.begin(), fs.binders.begin(),
                                 fs.binders.end());
      o.target = still_on_left ? mk_parallel(still, s.target)
                               : mk_parallel(s.target, still);
      out.push_back(std::move(o));
    }
  }

  void com_steps(const Assertion& env, const AgentRef& sender, const AgentRef& receiver,
                 bool sender_on_right, int rep_budget, std::vector<SymStep>& out) {
    Frame fp = session_frame(sender, session);
    Frame fq = session_frame(receiver, session);

    auto outs = enumerate(compose(env, fq.assertion), sender, rep_budget);
    auto ins = enumerate(compose(env, fp.assertion), receiver, rep_budget);

    for (const SymStep& o : outs) {
      if (o.action.kind != SymbolicAction::Kind::output) continue;
      const Anchor& ap = *o.anchor;
      for (const SymStep& i : ins) {
        if (i.action.kind != SymbolicAction::Kind::input) continue;
        const Anchor& aq = *i.anchor;

        // (nu bP~,bQ~){Psi' |- MP <-> MQ} /\ CP /\ CQ, where Psi'
        // carries both premise snapshots.
        AtomicConstraint lead;
        lead.binders = ap.binders;
        lead.binders.insert(lead.binders.end(), aq.binders.begin(), aq.binders.end());
        lead.binders.insert(lead.binders.end(), fp.binders.begin(), fp.binders.end());
        lead.binders.insert(lead.binders.end(), fq.binders.begin(), fq.binders.end());
        lead.env = compose(ap.env, aq.env);
        lead.cond = chan_eq(ap.channel, aq.channel);

        Constraint c{{lead}};
        for (std::size_t k = 1; k < o.constraint.conjuncts.size(); ++k)
          c.conjuncts.push_back(o.constraint.conjuncts[k]);
        for (std::size_t k = 1; k < i.constraint.conjuncts.size(); ++k)
          c.conjuncts.push_back(i.constraint.conjuncts[k]);

        AgentRef recv_cont =
            agent_substitute(i.target, {i.action.binder}, {o.action.object});
        AgentRef body = sender_on_right ? mk_parallel(recv_cont, o.target)
                                        : mk_parallel(o.target, recv_cont);
        AgentRef tgt = body;
        for (auto it = o.action.extruded.rbegin(); it != o.action.extruded.rend(); ++it)
          tgt = mk_restriction(*it, tgt);
        out.push_back(SymStep{SymbolicAction::tau(), std::move(c), std::nullopt, tgt});
      }
    }
  }
};

}  // namespace detail

inline SymbolicTransitionSet symbolic_transitions(const Instance& inst, const Assertion& env,
                                                  const AgentRef& p, FreshSession& session,
                                                  int rep_bound) {
  detail::SymbolicEnum en{inst, session};
  auto steps = en.enumerate(env, p, rep_bound);
  std::map<std::string, SymbolicTransition> dedup;
  for (detail::SymStep& s : steps) {
    SymbolicTransition t{env, p, std::move(s.action), std::move(s.constraint),
                         std::move(s.anchor), std::move(s.target)};
    dedup.emplace(sym_transition_key(t), std::move(t));
  }
  SymbolicTransitionSet out;
  out.exhausted = en.exhausted;
  for (auto& [k, t] : dedup) out.items.push_back(std::move(t));
  return out;
}

inline SymbolicTransitionSet symbolic_transitions(const Instance& inst, const Assertion& env,
                                                  const AgentRef& p, const NameSet& extra_avoid,
                                                  int rep_bound) {
  NameSet avoid = extra_avoid;
  collect_support(env, avoid);
  collect_support(p, avoid);
  FreshSession session(avoid);
  return symbolic_transitions(inst, env, p, session, rep_bound);
}

}  // namespace psi

#endif  // PSI_SYMBOLIC_HPP

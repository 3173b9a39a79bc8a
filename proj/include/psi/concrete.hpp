#ifndef PSI_CONCRETE_HPP
#define PSI_CONCRETE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psi/instance.hpp"
#include "psi/syntax.hpp"

namespace psi {

struct ConcreteAction {
  enum class Kind { output, input_late, input_early, tau };
  Kind kind = Kind::tau;
  Term subject;      // output, inputs
  NameSeq extruded;  // output: names opened by this action, bind into object+target
  Term object;       // output, input_early
  Name binder;       // input_late: binds into the target

  static ConcreteAction out(Term subj, NameSeq ext, Term obj) {
    ConcreteAction a;
    a.kind = Kind::output;
    a.subject = std::move(subj);
    a.extruded = std::move(ext);
    a.object = std::move(obj);
    return a;
  }
  static ConcreteAction in_late(Term subj, Name x) {
    ConcreteAction a;
    a.kind = Kind::input_late;
    a.subject = std::move(subj);
    a.binder = x;
    return a;
  }
  static ConcreteAction in_early(Term subj, Term obj) {
    ConcreteAction a;
    a.kind = Kind::input_early;
    a.subject = std::move(subj);
    a.object = std::move(obj);
    return a;
  }
  static ConcreteAction tau() { return ConcreteAction{}; }

  NameSeq bound_names() const {
    if (kind == Kind::output) return extruded;
    if (kind == Kind::input_late) return {binder};
    return {};
  }

  // n(alpha): subject and object names; extruded names are in the
  // support of an output action.
  NameSet names() const {
    NameSet s;
    if (kind == Kind::tau) return s;
    collect_support(subject, s);
    if (kind == Kind::output || kind == Kind::input_early) collect_support(object, s);
    if (kind == Kind::output)
      for (Name b : extruded) s.insert(b);
    if (kind == Kind::input_late) s.insert(binder);
    return s;
  }
};

inline std::string print_action(const ConcreteAction& a) {
  switch (a.kind) {
    case ConcreteAction::Kind::tau: return "tau";
    case ConcreteAction::Kind::input_late:
      return print_term(a.subject) + "(" + display(a.binder) + ")";
    case ConcreteAction::Kind::input_early:
      return print_term(a.subject) + " " + print_term(a.object);
    case ConcreteAction::Kind::output: {
      std::string s = print_term(a.subject) + "!";
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

struct ConcreteTransition {
  Assertion env;
  AgentRef source;
  ConcreteAction action;
  AgentRef target;
};

struct ConcreteTransitionSet {
  std::vector<ConcreteTransition> items;
  bool exhausted = false;  // a replication bound truncated the search
};

// Canonical key with bn(alpha) binding into both object and target, so
// transitions are identified up to alpha.
inline std::string transition_key(const ConcreteAction& a, const AgentRef& target) {
  ConcreteAction ca = a;
  AgentRef t = target;
  NameSeq bn = a.bound_names();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    Name c = NameTable::instance().canon(100000 + i);
    if (ca.kind == ConcreteAction::Kind::output) {
      ca.object = swap(bn[i], c, ca.object);
      for (Name& e : ca.extruded) e = swap_name(bn[i], c, e);
    } else {
      ca.binder = swap_name(bn[i], c, ca.binder);
    }
    t = swap(bn[i], c, t);
  }
  return print_action(ca) + " -> " + canonical_print(t);
}

namespace detail {

inline Frame session_frame(const AgentRef& p, FreshSession& session) {
  Frame f = frame_of(p);
  for (Name& b : f.binders) {
    Name nb = session.fresh(display(b));
    f.assertion = swap(b, nb, f.assertion);
    b = nb;
  }
  return f;
}

struct Step {
  ConcreteAction action;
  AgentRef target;
};

enum class SemMode { late, early };

struct ConcreteEnum {
  const Instance& inst;
  const DomainConfig& dom;
  FreshSession& session;
  SemMode mode;
  std::vector<Term> object_pool;  // early input objects
  bool exhausted = false;

  std::vector<Step> enumerate(const Assertion& env, const AgentRef& p, int rep_budget) {
    std::vector<Step> out;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, OutputNode>) {
            for (const Term& k : inst.channel_candidates(env, n.subject, dom.names, dom))
              out.push_back(Step{ConcreteAction::out(k, {}, n.object), n.cont});
          } else if constexpr (std::is_same_v<T, InputNode>) {
            auto cands = inst.channel_candidates(env, n.subject, dom.names, dom);
            if (mode == SemMode::late) {
              for (const Term& k : cands) {
                Name x = session.fresh(display(n.binder));
                out.push_back(Step{ConcreteAction::in_late(k, x), swap(n.binder, x, n.cont)});
              }
            } else {
              for (const Term& k : cands)
                for (const Term& obj : object_pool)
                  out.push_back(Step{ConcreteAction::in_early(k, obj),
                                     agent_substitute(n.cont, {n.binder}, {obj})});
            }
          } else if constexpr (std::is_same_v<T, CaseNode>) {
            for (const CaseBranch& br : n.branches)
              if (inst.entails(env, br.cond)) {
                auto sub = enumerate(env, br.body, rep_budget);
                out.insert(out.end(), sub.begin(), sub.end());
              }
          } else if constexpr (std::is_same_v<T, RestrictionNode>) {
            Name b = session.fresh(display(n.name));
            AgentRef body = swap(n.name, b, n.body);
            for (Step& s : enumerate(env, body, rep_budget)) {
              NameSet an = s.action.names();
              if (!an.count(b)) {
                out.push_back(Step{s.action, mk_restriction(b, s.target)});
              } else if (s.action.kind == ConcreteAction::Kind::output &&
                         support(s.action.object).count(b) &&
                         !support(s.action.subject).count(b)) {
                ConcreteAction open = s.action;
                open.extruded.push_back(b);
                out.push_back(Step{open, s.target});
              }
              // otherwise: the subject mentions b, no rule applies
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
            (void)n;  // assertions have no transitions
          }
        },
        p->node);
    return out;
  }

  // moving component acts; the other stands still and contributes its frame
  void par_steps(const Assertion& env, const AgentRef& moving, const AgentRef& still,
                 bool still_on_left, int rep_budget, std::vector<Step>& out) {
    Frame fs = session_frame(still, session);
    Assertion premise_env = compose(fs.assertion, env);
    for (Step& s : enumerate(premise_env, moving, rep_budget)) {
      // bn(alpha) # still holds by construction: binders are session-fresh
      AgentRef tgt = still_on_left ? mk_parallel(still, s.target)
                                   : mk_parallel(s.target, still);
      out.push_back(Step{s.action, tgt});
    }
  }

  void com_steps(const Assertion& env, const AgentRef& sender, const AgentRef& receiver,
                 bool sender_on_right, int rep_budget, std::vector<Step>& out) {
    Frame fp = session_frame(sender, session);
    Frame fq = session_frame(receiver, session);
    Assertion full = compose(compose(env, fp.assertion), fq.assertion);

    auto outs = enumerate(compose(fq.assertion, env), sender, rep_budget);
    std::vector<Step> ins;
    if (mode == SemMode::late) {
      ins = enumerate(compose(fp.assertion, env), receiver, rep_budget);
    } else {
      // Early Com: the received object is exactly the sent one; extend
      // the input object pool with the available output objects.
      std::vector<Term> saved = object_pool;
      for (const Step& o : outs)
        if (o.action.kind == ConcreteAction::Kind::output)
          object_pool.push_back(o.action.object);
      std::sort(object_pool.begin(), object_pool.end());
      object_pool.erase(std::unique(object_pool.begin(), object_pool.end()),
                        object_pool.end());
      ins = enumerate(compose(fp.assertion, env), receiver, rep_budget);
      object_pool = std::move(saved);
    }

    for (const Step& o : outs) {
      if (o.action.kind != ConcreteAction::Kind::output) continue;
      for (const Step& i : ins) {
        AgentRef p_cont, q_cont;
        if (mode == SemMode::late) {
          if (i.action.kind != ConcreteAction::Kind::input_late) continue;
          q_cont = agent_substitute(i.target, {i.action.binder}, {o.action.object});
        } else {
          if (i.action.kind != ConcreteAction::Kind::input_early) continue;
          if (!(i.action.object == o.action.object)) continue;
          q_cont = i.target;
        }
        if (!inst.entails(full, chan_eq(o.action.subject, i.action.subject))) continue;
        AgentRef body = sender_on_right ? mk_parallel(q_cont, o.target)
                                        : mk_parallel(o.target, q_cont);
        AgentRef tgt = body;
        for (auto it = o.action.extruded.rbegin(); it != o.action.extruded.rend(); ++it)
          tgt = mk_restriction(*it, tgt);
        out.push_back(Step{ConcreteAction::tau(), tgt});
      }
    }
  }
};

inline ConcreteTransitionSet run_enum(const Instance& inst, const Assertion& env,
                                      const AgentRef& p, const DomainConfig& dom,
                                      SemMode mode, const std::vector<Term>& object_pool) {
  NameSet avoid = dom.names;
  collect_support(env, avoid);
  collect_support(p, avoid);
  FreshSession session(avoid);
  ConcreteEnum en{inst, dom, session, mode, object_pool};
  auto steps = en.enumerate(env, p, dom.rep_bound);

  std::map<std::string, ConcreteTransition> dedup;
  for (const Step& s : steps)
    dedup.emplace(transition_key(s.action, s.target),
                  ConcreteTransition{env, p, s.action, s.target});
  ConcreteTransitionSet out;
  out.exhausted = en.exhausted;
  for (auto& [k, t] : dedup) out.items.push_back(std::move(t));
  return out;
}

}  // namespace detail

inline ConcreteTransitionSet late_transitions(const Instance& inst, const Assertion& env,
                                              const AgentRef& p, const DomainConfig& dom) {
  return detail::run_enum(inst, env, p, dom, detail::SemMode::late, {});
}

// Early semantics; input objects are drawn from the instance's bounded
// term domain (plus communicated objects inside Com).
inline ConcreteTransitionSet early_transitions(const Instance& inst, const Assertion& env,
                                               const AgentRef& p, const DomainConfig& dom) {
  NameSet pool = dom.names;
  collect_support(p, pool);
  collect_support(env, pool);
  return detail::run_enum(inst, env, p, dom, detail::SemMode::early,
                          inst.term_domain(pool, dom));
}

// ---- late/early correspondence oracle ----

struct LateEarlyReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline LateEarlyReport check_late_early(const Instance& inst, const Assertion& env,
                                        const AgentRef& p, const DomainConfig& dom) {
  LateEarlyReport rep;
  auto late = late_transitions(inst, env, p, dom);
  auto early = early_transitions(inst, env, p, dom);

  NameSet pool = dom.names;
  collect_support(p, pool);
  collect_support(env, pool);
  auto objects = inst.term_domain(pool, dom);

  std::set<std::string> early_keys, late_keys_outtau, early_keys_outtau;
  for (const auto& t : early.items) {
    std::string k = transition_key(t.action, t.target);
    early_keys.insert(k);
    if (t.action.kind == ConcreteAction::Kind::output ||
        t.action.kind == ConcreteAction::Kind::tau)
      early_keys_outtau.insert(k);
  }
  for (const auto& t : late.items)
    if (t.action.kind == ConcreteAction::Kind::output ||
        t.action.kind == ConcreteAction::Kind::tau)
      late_keys_outtau.insert(transition_key(t.action, t.target));

  // clause 1, late -> early: every late input instantiates pointwise
  for (const auto& t : late.items) {
    if (t.action.kind != ConcreteAction::Kind::input_late) continue;
    for (const Term& obj : objects) {
      AgentRef inst_target = agent_substitute(t.target, {t.action.binder}, {obj});
      std::string want =
          transition_key(ConcreteAction::in_early(t.action.subject, obj), inst_target);
      if (!early_keys.count(want))
        rep.violations.push_back("late input " + print_action(t.action) +
                                 " has no early counterpart for object " + print_term(obj));
    }
  }

  // clause 1, early -> late
  for (const auto& t : early.items) {
    if (t.action.kind != ConcreteAction::Kind::input_early) continue;
    bool found = false;
    for (const auto& l : late.items) {
      if (l.action.kind != ConcreteAction::Kind::input_late) continue;
      if (!(l.action.subject == t.action.subject)) continue;
      AgentRef inst_target =
          agent_substitute(l.target, {l.action.binder}, {t.action.object});
      if (transition_key(ConcreteAction::in_early(t.action.subject, t.action.object),
                         inst_target) == transition_key(t.action, t.target)) {
        found = true;
        break;
      }
    }
    if (!found)
      rep.violations.push_back("early input " + print_action(t.action) +
                               " not explained by any late input");
  }

  // clause 2: output and tau transitions coincide
  for (const std::string& k : late_keys_outtau)
    if (!early_keys_outtau.count(k))
      rep.violations.push_back("late-only output/tau transition: " + k);
  for (const std::string& k : early_keys_outtau)
    if (!late_keys_outtau.count(k))
      rep.violations.push_back("early-only output/tau transition: " + k);

  return rep;
}

}  // namespace psi

#endif  // PSI_CONCRETE_HPP

#ifndef PSI_BISIM_SYMBOLIC_HPP
#define PSI_BISIM_SYMBOLIC_HPP

// Included from psi/bisim.hpp.

namespace psi {

// Responder transition aligned onto the challenger's action names, so
// matching actions compare syntactically equal. Renaming subject, input
// binder, and extruded names is alpha on the transition: all of them are
// fresh placeholders.
inline std::vector<SymbolicTransition> align_symbolic(const SymbolicAction& want,
                                                      const SymbolicTransition& r) {
  std::vector<SymbolicTransition> out;
  if (r.action.kind != want.kind) return out;
  if (want.kind == SymbolicAction::Kind::tau) {
    out.push_back(r);
    return out;
  }
  auto rename_all = [](SymbolicTransition t, Name from, Name to) {
    if (from == to) return t;
    t.action.subject = swap_name(from, to, t.action.subject);
    t.action.binder = swap_name(from, to, t.action.binder);
    for (Name& e : t.action.extruded) e = swap_name(from, to, e);
    t.action.object = swap(from, to, t.action.object);
    t.constraint = swap(from, to, t.constraint);
    if (t.anchor) {
      for (Name& b : t.anchor->binders) b = swap_name(from, to, b);
      t.anchor->env = swap(from, to, t.anchor->env);
      t.anchor->channel = swap(from, to, t.anchor->channel);
      t.anchor->subject = swap_name(from, to, t.anchor->subject);
    }
    t.target = swap(from, to, t.target);
    return t;
  };

  if (want.kind == SymbolicAction::Kind::input) {
    SymbolicTransition t = rename_all(r, r.action.subject, want.subject);
    t = rename_all(t, t.action.binder, want.binder);
    out.push_back(std::move(t));
    return out;
  }
  // output: subject plus every pairing of extruded names
  if (r.action.extruded.size() != want.extruded.size()) return out;
  std::vector<std::size_t> perm(r.action.extruded.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  do {
    SymbolicTransition t = rename_all(r, r.action.subject, want.subject);
    NameSeq src;
    for (std::size_t i = 0; i < perm.size(); ++i) src.push_back(t.action.extruded[perm[i]]);
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) {
      t = rename_all(t, src[i], want.extruded[i]);
      for (std::size_t j = i + 1; j < perm.size(); ++j) src[j] = swap_name(src[i], want.extruded[i], src[j]);
    }
    if (ok) {
      t.action.extruded = want.extruded;
      out.push_back(std::move(t));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Solutions of a triple's constraint range over the free names of the
// constraint and of both agents (minus declared constants and pinned
// extrusions), approximating the unrestricted quantification over
// substitutions.
inline NameSet sym_triple_targets(const Constraint& c, const AgentRef& p, const AgentRef& q,
                                  const DomainConfig& dom, const NameSet& pinned) {
  NameSet t = solution_targets(c, dom, pinned);
  NameSet ag = support(p);
  collect_support(q, ag);
  for (Name n : ag) t.insert(n);
  for (Name n : dom.constants) t.erase(n);
  for (Name n : pinned) t.erase(n);
  return t;
}

struct SymGroupRecord {
  ExtConstraint group;            // one member of the case split
  SymbolicTransition responder;   // aligned to the challenger's action
  Constraint next_constraint;
  NameSet next_pinned;
  std::string next_key;
};

struct SymChallengeRecord {
  bool left_side = true;  // challenger is the triple's left agent
  SymbolicTransition challenger;
  std::string challenger_key;
  std::vector<SymGroupRecord> groups;  // empty iff C /\ C_P is unsatisfiable
};

struct SymTripleRecord {
  std::string key;
  Constraint c;
  AgentRef p, q;
  NameSet pinned;
  bool identical = false;
  std::vector<SymChallengeRecord> challenges;
};

class SymbolicBisim {
 public:
  SymbolicBisim(const Instance& inst, const DomainConfig& dom) : inst_(inst), dom_(dom) {}

  Verdict run(const AgentRef& p, const AgentRef& q) {
    committed_.clear();
    memo_.clear();
    stack_.clear();
    exhausted_ = false;
    Verdict v;
    nlohmann::json cex;
    std::vector<SymTripleRecord> pend;
    Res res = check(true_constraint(), p, q, {}, cex, pend);
    v.bisimilar = res.ok;
    v.exhausted = exhausted_;
    if (res.ok) {
      for (auto& r : pend) committed_.emplace(r.key, std::move(r));
      for (const auto& [k, r] : committed_) {
        nlohmann::json challenges = nlohmann::json::array();
        for (const auto& ch : r.challenges)
          challenges.push_back({{"side", ch.left_side ? "left" : "right"},
                                {"action", print_action(ch.challenger.action)},
                                {"case_split_size", ch.groups.size()}});
        v.witness.push_back({{"constraint", to_json(r.c)},
                             {"constraint_text", print_constraint(r.c)},
                             {"left", print_agent(r.p)},
                             {"right", print_agent(r.q)},
                             {"identical", r.identical},
                             {"challenges", challenges}});
      }
    } else {
      v.counterexample = cex;
    }
    return v;
  }

  const std::map<std::string, SymTripleRecord>& relation() const { return committed_; }
  bool exhausted() const { return exhausted_; }

  static void normalize(Constraint& c, AgentRef& p, AgentRef& q, NameSet& pinned) {
    std::vector<Name> ordered;
    NameSet seen;
    detail::order_placeholders(c, ordered, seen);
    detail::order_placeholders(p, ordered, seen);
    detail::order_placeholders(q, ordered, seen);
    for (Name n : pinned)
      detail::order_placeholders(n, ordered, seen);
    NameSet np;
    detail::renumber_apply(ordered, [&](Name from, Name to) {
      c = swap(from, to, c);
      p = swap(from, to, p);
      q = swap(from, to, q);
      NameSet next;
      for (Name n : pinned) next.insert(swap_name(from, to, n));
      pinned = std::move(next);
    });
    (void)np;
  }

  std::string triple_key(const std::vector<Solution>& sols, const AgentRef& p,
                         const AgentRef& q, const NameSet& pinned) const {
    std::string a = canonical_print(p), b = canonical_print(q);
    if (b < a) std::swap(a, b);
    std::string s = "sols:";
    for (const Solution& x : sols) s += print_solution(x) + ";";
    s += " || " + a + " || " + b + " || pinned:";
    for (Name n : pinned) s += display(n) + ",";
    return s;
  }

  struct Res {
    bool ok = false;
    int min_dep = std::numeric_limits<int>::max();
    std::string key;
  };

  NameSet triple_targets(const Constraint& c, const AgentRef& p, const AgentRef& q,
                         const NameSet& pinned) const {
    return sym_triple_targets(c, p, q, dom_, pinned);
  }

  Res check(Constraint c, AgentRef p, AgentRef q, NameSet pinned, nlohmann::json& cex,
            std::vector<SymTripleRecord>& pend) {
    normalize(c, p, q, pinned);
    NameSet targets = triple_targets(c, p, q, pinned);
    auto csols = solutions(inst_, c, dom_, targets);
    std::string key = triple_key(csols, p, q, pinned);

    auto mit = memo_.find(key);
    if (mit != memo_.end()) {
      if (!mit->second)
        cex = fail_step(c, p, q, "revisited failing triple", "", nlohmann::json::array(), {});
      return Res{mit->second, std::numeric_limits<int>::max(), key};
    }
    for (std::size_t i = 0; i < stack_.size(); ++i)
      if (stack_[i] == key) return Res{true, int(i), key};

    int depth = int(stack_.size());
    stack_.push_back(key);
    Res res = expand(c, p, q, pinned, csols, key, cex, pend);
    stack_.pop_back();
    res.key = key;

    if (!res.ok)
      memo_[key] = false;
    else if (res.min_dep >= depth) {
      res.min_dep = std::numeric_limits<int>::max();
      memo_[key] = true;
    }
    return res;
  }

 private:
  Res expand(const Constraint& c, const AgentRef& p, const AgentRef& q,
             const NameSet& pinned, const std::vector<Solution>& csols,
             const std::string& key, nlohmann::json& cex,
             std::vector<SymTripleRecord>& pend) {
    Res res;
    res.ok = true;

    SymTripleRecord rec{key, c, p, q, pinned, alpha_eq(p, q), {}};
    if (rec.identical) {
      pend.push_back(std::move(rec));
      return res;
    }

    if (!symbolic_static_equivalent_sols(inst_, csols, p, q, dom_)) {
      cex = fail_step(c, p, q, "symbolic static equivalence fails", "",
                      nlohmann::json::array(), {});
      res.ok = false;
      return res;
    }
    if (csols.empty()) {
      // unsatisfiable constraint: every clause holds vacuously
      pend.push_back(std::move(rec));
      return res;
    }

    NameSet avoid = dom_.names;
    collect_support(c, avoid);
    collect_support(p, avoid);
    collect_support(q, avoid);
    for (Name n : pinned) avoid.insert(n);
    for (Name n : dom_.constants) avoid.insert(n);

    auto pts = symbolic_transitions(inst_, Assertion::unit(), p, avoid, dom_.rep_bound);
    NameSet avoid2 = avoid;
    for (const auto& t : pts.items) {
      NameSet an = t.action.names();
      avoid2.insert(an.begin(), an.end());
      collect_support(t.constraint, avoid2);
      collect_support(t.target, avoid2);
    }
    auto qts = symbolic_transitions(inst_, Assertion::unit(), q, avoid2, dom_.rep_bound);
    exhausted_ = exhausted_ || pts.exhausted || qts.exhausted;

    for (int side = 0; side < 2; ++side) {
      const auto& challengers = side == 0 ? pts : qts;
      const auto& responders = side == 0 ? qts : pts;

      for (const SymbolicTransition& t : challengers.items) {
        Constraint cand = conjoin(c, t.constraint);
        NameSet tg = triple_targets(cand, p, q, pinned);
        auto sols = solutions(inst_, cand, dom_, tg);

        SymChallengeRecord ch;
        ch.left_side = side == 0;
        ch.challenger = t;
        ch.challenger_key = sym_transition_key(t);

        if (sols.empty()) {
          rec.challenges.push_back(std::move(ch));
          continue;  // the empty case split covers an unsatisfiable C /\ C_P
        }

        std::vector<SymbolicTransition> cands;
        for (const SymbolicTransition& r : responders.items)
          for (SymbolicTransition& a : align_symbolic(t.action, r))
            cands.push_back(std::move(a));

        // Group solutions by the set of responder transitions able to
        // match them; each group becomes one extensional constraint of
        // the case split.
        std::map<std::vector<int>, ExtConstraint> groups;
        bool is_out = t.action.kind == SymbolicAction::Kind::output;
        for (const Solution& s : sols) {
          std::vector<int> ms;
          for (std::size_t i = 0; i < cands.size(); ++i) {
            if (!check_solution(inst_, s, cands[i].constraint)) continue;
            if (is_out &&
                !(apply(s.subst, t.action.object) == apply(s.subst, cands[i].action.object)))
              continue;
            ms.push_back(int(i));
          }
          groups[ms].sols.push_back(s);
        }
        for (auto& [ms, ext] : groups) std::sort(ext.sols.begin(), ext.sols.end());

        std::vector<Constraint> hat;
        for (const auto& [ms, ext] : groups) hat.push_back(Constraint{{ext}});
        if (!implies_disjunction(inst_, cand, hat, dom_, pinned)) {
          cex = fail_step(c, p, q, "case split does not cover the challenger constraint",
                          print_action(t.action), nlohmann::json::array(), {});
          res.ok = false;
          return res;
        }

        for (const auto& [ms, ext] : groups) {
          if (ms.empty()) {
            nlohmann::json bad = nlohmann::json::array();
            for (const Solution& s : ext.sols) bad.push_back(to_json(s));
            cex = fail_step(c, p, q,
                            std::string(side == 0 ? "left" : "right") + " transition has no "
                            "matching responder for these solutions",
                            print_action(t.action), bad, {});
            res.ok = false;
            return res;
          }
          bool matched = false;
          nlohmann::json last_sub;
          for (int idx : ms) {
            const SymbolicTransition& r = cands[idx];
            Constraint next{{ext}};
            NameSet pinned2 = pinned;
            if (is_out && !t.action.extruded.empty()) {
              for (Name a : t.action.extruded) {
                next.conjuncts.push_back(FreshConstraint{a, p});
                next.conjuncts.push_back(FreshConstraint{a, q});
                pinned2.insert(a);
              }
            }
            AgentRef np = side == 0 ? t.target : r.target;
            AgentRef nq = side == 0 ? r.target : t.target;
            std::vector<SymTripleRecord> sub;
            nlohmann::json subcex;
            Res rr = check(next, np, nq, pinned2, subcex, sub);
            res.min_dep = std::min(res.min_dep, rr.min_dep);
            if (rr.ok) {
              matched = true;
              pend.insert(pend.end(), std::make_move_iterator(sub.begin()),
                          std::make_move_iterator(sub.end()));
              ch.groups.push_back(SymGroupRecord{ext, r, next, pinned2, rr.key});
              break;
            }
            last_sub = subcex;
          }
          if (!matched) {
            nlohmann::json bad = nlohmann::json::array();
            for (const Solution& s : ext.sols) bad.push_back(to_json(s));
            cex = fail_step(c, p, q,
                            std::string(side == 0 ? "left" : "right") +
                                " transition matched but derivatives differ",
                            print_action(t.action), bad, last_sub);
            res.ok = false;
            return res;
          }
        }
        rec.challenges.push_back(std::move(ch));
      }
    }

    pend.push_back(std::move(rec));
    return res;
  }

  nlohmann::json fail_step(const Constraint& c, const AgentRef& p, const AgentRef& q,
                           const std::string& why, const std::string& action,
                           nlohmann::json unmatched, const nlohmann::json& inner) {
    nlohmann::json step{{"constraint", print_constraint(c)},
                        {"left", print_agent(p)},
                        {"right", print_agent(q)},
                        {"reason", why}};
    if (!action.empty()) step["action"] = action;
    if (!unmatched.empty()) step["unmatched_solutions"] = unmatched;
    nlohmann::json arr = nlohmann::json::array();
    arr.push_back(step);
    if (inner.is_array())
      for (const auto& x : inner) arr.push_back(x);
    return arr;
  }

  const Instance& inst_;
  DomainConfig dom_;
  std::map<std::string, bool> memo_;
  std::map<std::string, SymTripleRecord> committed_;
  std::vector<std::string> stack_;
  bool exhausted_ = false;
};

inline Verdict symbolic_bisim(const Instance& inst, const AgentRef& p, const AgentRef& q,
                              const DomainConfig& dom) {
  SymbolicBisim sb(inst, dom);
  return sb.run(p, q);
}

// Independent clause-by-clause verification of a recorded symbolic
// witness. Shares only the primitive solver operations with the search.
inline bool replay_symbolic_witness(const Instance& inst,
                                    const std::map<std::string, SymTripleRecord>& rel,
                                    const DomainConfig& dom, std::string* why = nullptr) {
  auto complain = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  for (const auto& [key, r] : rel) {
    auto csols = solutions(inst, r.c, dom, sym_triple_targets(r.c, r.p, r.q, dom, r.pinned));
    if (r.identical) {
      if (!alpha_eq(r.p, r.q)) return complain("identical-flagged triple differs: " + key);
      continue;
    }
    if (!symbolic_static_equivalent_sols(inst, csols, r.p, r.q, dom))
      return complain("static equivalence fails: " + key);
    if (csols.empty()) continue;

    NameSet avoid = dom.names;
    collect_support(r.c, avoid);
    collect_support(r.p, avoid);
    collect_support(r.q, avoid);
    for (Name n : r.pinned) avoid.insert(n);
    auto pts = symbolic_transitions(inst, Assertion::unit(), r.p, avoid, dom.rep_bound);
    NameSet avoid2 = avoid;
    for (const auto& t : pts.items) {
      NameSet an = t.action.names();
      avoid2.insert(an.begin(), an.end());
      collect_support(t.constraint, avoid2);
      collect_support(t.target, avoid2);
    }
    auto qts = symbolic_transitions(inst, Assertion::unit(), r.q, avoid2, dom.rep_bound);

    for (int side = 0; side < 2; ++side) {
      const auto& fresh = side == 0 ? pts : qts;
      for (const SymbolicTransition& t : fresh.items) {
        Constraint cand = conjoin(r.c, t.constraint);
        auto sols = solutions(inst, cand, dom, sym_triple_targets(cand, r.p, r.q, dom, r.pinned));
        std::string tkey = sym_transition_key(t);
        bool found = false;
        for (const auto& ch : r.challenges)
          if (ch.left_side == (side == 0) && ch.challenger_key == tkey) {
            found = true;
            break;
          }
        if (!found && !sols.empty())
          return complain("unrecorded challenger transition " + print_action(t.action) +
                          " in " + key);
      }
    }

    for (const auto& ch : r.challenges) {
      Constraint cand = conjoin(r.c, ch.challenger.constraint);
      std::vector<Constraint> hat;
      for (const auto& g : ch.groups) hat.push_back(Constraint{{g.group}});
      if (!implies_disjunction(inst, cand, hat, dom, r.pinned))
        return complain("case split fails to cover " + print_action(ch.challenger.action) +
                        " in " + key);

      const auto& resp_fresh = ch.left_side ? qts : pts;
      std::set<std::string> rkeys;
      for (const SymbolicTransition& rr : resp_fresh.items)
        for (const SymbolicTransition& a : align_symbolic(ch.challenger.action, rr))
          rkeys.insert(sym_transition_key(a));

      bool is_out = ch.challenger.action.kind == SymbolicAction::Kind::output;
      for (const auto& g : ch.groups) {
        if (!rkeys.count(sym_transition_key(g.responder)))
          return complain("recorded responder is not a transition of the other agent in " +
                          key);
        if (!implies(inst, Constraint{{g.group}}, g.responder.constraint, dom, r.pinned))
          return complain("C' does not imply the responder constraint in " + key);
        if (is_out) {
          Constraint objeq{{EqConstraint{ch.challenger.action.object,
                                         g.responder.action.object}}};
          if (!implies(inst, Constraint{{g.group}}, objeq, dom, r.pinned))
            return complain("C' does not force equal output objects in " + key);
          for (Name a : ch.challenger.action.extruded) {
            bool fp = false, fq = false;
            for (const Conjunct& j : g.next_constraint.conjuncts)
              if (const auto* f = std::get_if<FreshConstraint>(&j)) {
                if (f->name == a && std::holds_alternative<AgentRef>(f->target)) {
                  if (agents_equal(std::get<AgentRef>(f->target), r.p) ||
                      alpha_eq(std::get<AgentRef>(f->target), r.p))
                    fp = true;
                  if (agents_equal(std::get<AgentRef>(f->target), r.q) ||
                      alpha_eq(std::get<AgentRef>(f->target), r.q))
                    fq = true;
                }
              }
            if (!fp || !fq)
              return complain("missing freshness constraints on extruded " + display(a) +
                              " in " + key);
          }
        }
        // the derivative triple must be in the relation
        Constraint nc = g.next_constraint;
        AgentRef np = ch.left_side ? ch.challenger.target : g.responder.target;
        AgentRef nq = ch.left_side ? g.responder.target : ch.challenger.target;
        NameSet npin = g.next_pinned;
        SymbolicBisim probe(inst, dom);
        SymbolicBisim::normalize(nc, np, nq, npin);
        auto nsols = solutions(inst, nc, dom, sym_triple_targets(nc, np, nq, dom, npin));
        std::string nk = probe.triple_key(nsols, np, nq, npin);
        if (nk != g.next_key)
          return complain("recorded derivative key mismatch in " + key);
        if (!rel.count(nk))
          return complain("derivative triple escapes the relation in " + key);
      }
    }
  }
  return true;
}

// ---- full abstraction crosscheck ----

struct CrossReport {
  bool agree = false;
  bool concrete_bisimilar = false;
  bool symbolic_bisimilar = false;
  bool exhausted = false;
  nlohmann::json details;
};

inline CrossReport crosscheck_full_abstraction(const Instance& inst, const AgentRef& p,
                                               const AgentRef& q, const DomainConfig& dom) {
  CrossReport rep;
  NameSet fn = support(p);
  collect_support(q, fn);
  for (Name n : dom.constants) fn.erase(n);

  NameSet pool = dom.names;
  NameSet sup = support(p);
  pool.insert(sup.begin(), sup.end());
  sup = support(q);
  pool.insert(sup.begin(), sup.end());
  std::vector<Term> base = inst.term_domain(pool, dom);

  std::vector<Name> targets(fn.begin(), fn.end());
  std::vector<std::vector<Term>> cands(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    cands[i] = base;
    cands[i].push_back(Term::mk_name(targets[i]));
    std::sort(cands[i].begin(), cands[i].end());
    cands[i].erase(std::unique(cands[i].begin(), cands[i].end()), cands[i].end());
  }

  bool conc = true;
  nlohmann::json closing = nlohmann::json::array();
  std::vector<std::size_t> idx(targets.size(), 0);
  for (;;) {
    Substitution sub;
    for (std::size_t i = 0; i < targets.size(); ++i)
      sub.map.emplace_back(targets[i], cands[i][idx[i]]);
    try {
      AgentRef ps = psi::apply(sub, p);
      AgentRef qs = psi::apply(sub, q);
      Verdict v = concrete_bisim(inst, Assertion::unit(), ps, qs, dom);
      rep.exhausted = rep.exhausted || v.exhausted;
      closing.push_back(
          {{"subst", print_substitution(sub)}, {"bisimilar", v.bisimilar}});
      if (!v.bisimilar) conc = false;
    } catch (const substitution_error&) {
      closing.push_back({{"subst", print_substitution(sub)}, {"skipped", true}});
    }
    std::size_t i = 0;
    for (; i < targets.size(); ++i) {
      if (++idx[i] < cands[i].size()) break;
      idx[i] = 0;
    }
    if (i == targets.size()) break;
    if (!conc) break;  // one failing closure settles the concrete verdict
  }

  Verdict sv = symbolic_bisim(inst, p, q, dom);
  rep.exhausted = rep.exhausted || sv.exhausted;
  rep.concrete_bisimilar = conc;
  rep.symbolic_bisimilar = sv.bisimilar;
  rep.agree = conc == sv.bisimilar;
  rep.details = {{"closing_substitutions", closing},
                 {"concrete", conc},
                 {"symbolic", sv.bisimilar},
                 {"symbolic_verdict", sv.to_json()}};
  return rep;
}

}  // namespace psi

#endif  // PSI_BISIM_SYMBOLIC_HPP

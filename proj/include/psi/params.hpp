#ifndef PSI_PARAMS_HPP
#define PSI_PARAMS_HPP

#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psi/agent.hpp"
#include "psi/instance.hpp"

namespace psi {

// Def-style assertion equivalence, approximated over a finite probe set.
inline bool assertion_equivalent(const Instance& inst, const Assertion& a, const Assertion& b,
                                 const std::vector<Condition>& probes) {
  for (const Condition& c : probes)
    if (inst.entails(a, c) != inst.entails(b, c)) return false;
  return true;
}

// A frame entails a condition if, after renaming its binders away from
// the condition, the underlying assertion does.
inline bool frame_entails(const Instance& inst, const Frame& f, const Condition& cond) {
  NameSet avoid = support(cond);
  Frame r = rename_apart(f, avoid);
  return inst.entails(r.assertion, cond);
}

inline bool frame_equivalent(const Instance& inst, const Frame& f, const Frame& g,
                             const std::vector<Condition>& probes) {
  for (const Condition& c : probes)
    if (frame_entails(inst, f, c) != frame_entails(inst, g, c)) return false;
  return true;
}

// ---- requisite harness ----

struct LawResult {
  std::string law;
  bool passed = true;
  int checked = 0;  // non-vacuous instances exercised
  std::string counterexample;
};

struct RequisiteReport {
  std::vector<LawResult> laws;
  bool all_passed() const {
    for (const auto& l : laws)
      if (!l.passed) return false;
    return true;
  }
};

namespace detail {

template <class T>
const T& pick(const std::vector<T>& xs, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, xs.size() - 1);
  return xs[d(rng)];
}

inline std::vector<Condition> requisite_probes(const Instance& inst, const NameSet& pool,
                                               const DomainConfig& dom,
                                               std::initializer_list<const Assertion*> asserts) {
  NameSet names = pool;
  for (const Assertion* a : asserts) collect_support(*a, names);
  return inst.probe_conditions(names, dom);
}

}  // namespace detail

// Samples the seven laws on valid parameters over the instance's own
// domains. Assertion equality in the laws is read as probe-set
// equivalence.
inline RequisiteReport check_requisites(const Instance& inst, const NameSet& pool,
                                        const DomainConfig& dom, int samples,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto assertions = inst.assertion_domain(pool, dom);
  auto terms = inst.term_domain(pool, dom);
  auto conds = inst.probe_conditions(pool, dom);

  RequisiteReport rep;
  auto law = [&](const std::string& name) {
    rep.laws.push_back(LawResult{name});
    return &rep.laws.back();
  };

  LawResult* sym = law("channel symmetry");
  LawResult* trans = law("channel transitivity");
  LawResult* weak = law("weakening");
  LawResult* comp = law("composition congruence");
  LawResult* ident = law("identity");
  LawResult* assoc = law("associativity");
  LawResult* comm = law("commutativity");

  auto fail = [&](LawResult* l, const std::string& cx) {
    if (l->passed) {
      l->passed = false;
      l->counterexample = cx;
    }
  };

  for (int i = 0; i < samples; ++i) {
    const Assertion& p = detail::pick(assertions, rng);
    const Assertion& q = detail::pick(assertions, rng);
    const Assertion& r = detail::pick(assertions, rng);
    const Term& m = detail::pick(terms, rng);
    const Term& n = detail::pick(terms, rng);
    const Condition& phi = detail::pick(conds, rng);

    // Channel symmetry.
    if (inst.entails(p, chan_eq(m, n))) {
      ++sym->checked;
      if (!inst.entails(p, chan_eq(n, m)))
        fail(sym, print_assertion(p) + " |- " + print_condition(chan_eq(m, n)) +
                      " but not the converse");
    }

    // Channel transitivity, seeded through candidates so the premise is
    // frequently non-vacuous.
    {
      auto mids = inst.channel_candidates(p, m, pool, dom);
      if (!mids.empty()) {
        const Term& mid = detail::pick(mids, rng);
        auto lasts = inst.channel_candidates(p, mid, pool, dom);
        if (!lasts.empty()) {
          const Term& last = detail::pick(lasts, rng);
          if (inst.entails(p, chan_eq(m, mid)) && inst.entails(p, chan_eq(mid, last))) {
            ++trans->checked;
            if (!inst.entails(p, chan_eq(m, last)))
              fail(trans, print_condition(chan_eq(m, mid)) + " and " +
                              print_condition(chan_eq(mid, last)) + " under " +
                              print_assertion(p));
          }
        }
      }
    }

    // Weakening.
    if (inst.entails(p, phi)) {
      ++weak->checked;
      if (!inst.entails(compose(p, q), phi))
        fail(weak, print_assertion(p) + " |- " + print_condition(phi) + " lost under +" +
                       print_assertion(q));
    }

    // Composition congruence: probe set covers every name in sight.
    {
      auto probes = detail::requisite_probes(inst, pool, dom, {&p, &q, &r});
      if (assertion_equivalent(inst, p, q, probes)) {
        ++comp->checked;
        if (!assertion_equivalent(inst, compose(p, r), compose(q, r), probes))
          fail(comp, print_assertion(p) + " ~ " + print_assertion(q) + " but not after +" +
                         print_assertion(r));
      }
    }

    // Abelian monoid laws up to equivalence.
    {
      auto probes = detail::requisite_probes(inst, pool, dom, {&p, &q, &r});
      ++ident->checked;
      if (!assertion_equivalent(inst, compose(p, Assertion::unit()), p, probes))
        fail(ident, print_assertion(p));
      ++assoc->checked;
      if (!assertion_equivalent(inst, compose(compose(p, q), r), compose(p, compose(q, r)),
                                probes))
        fail(assoc, print_assertion(p) + ", " + print_assertion(q) + ", " + print_assertion(r));
      ++comm->checked;
      if (!assertion_equivalent(inst, compose(p, q), compose(q, p), probes))
        fail(comm, print_assertion(p) + ", " + print_assertion(q));
    }
  }
  return rep;
}

inline std::string format_report(const RequisiteReport& rep) {
  std::ostringstream os;
  for (const LawResult& l : rep.laws) {
    os << (l.passed ? "pass" : "FAIL") << "  " << l.law << "  (" << l.checked
       << " non-vacuous)";
    if (!l.passed) os << "  counterexample: " << l.counterexample;
    os << "\n";
  }
  return os.str();
}

}  // namespace psi

#endif  // PSI_PARAMS_HPP

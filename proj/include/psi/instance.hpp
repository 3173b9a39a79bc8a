#ifndef PSI_INSTANCE_HPP
#define PSI_INSTANCE_HPP

#include <map>
#include <string>
#include <vector>

#include "psi/agent.hpp"
#include "psi/term.hpp"

namespace psi {

// Finite exploration bounds. Everything the solver and the transition
// enumerators quantify over is drawn from here, so verdicts are always
// relative to a fixed, reproducible domain.
struct DomainConfig {
  NameSet names;                    // pool for candidate terms and probes
  std::vector<long long> literals;  // literal pool (assign)
  int term_depth = 1;               // constructor nesting bound
  int assert_depth = 0;             // max bindings per candidate assertion
  int rep_bound = 1;                // replication unfoldings
  int probe_depth = 1;              // term depth inside probe conditions
  NameSet constants;                // names solutions never substitute

  DomainConfig with_names(NameSet ns) const {
    DomainConfig d = *this;
    d.names = std::move(ns);
    return d;
  }
};

struct unknown_instance : error {
  using error::error;
};

// A psi-calculus instantiation: which terms/conditions/assertions are
// legal, what entailment means, and finite enumerators for desk-scale
// solving. Channel equivalence, composition and unit are shared by the
// uniform value representation (chan_eq / compose / Assertion::unit).
class Instance {
 public:
  virtual ~Instance() = default;

  virtual std::string key() const = 0;

  // sub-syntax admitted by this instance
  virtual bool term_allowed(const Term& t) const = 0;
  virtual bool condition_allowed(const Condition& c) const {
    return term_allowed(c.lhs) && term_allowed(c.rhs);
  }
  virtual bool assertions_allowed() const { return false; }
  // functor -> arity, for the shared term parser
  virtual const std::map<std::string, int>& functors() const {
    static const std::map<std::string, int> none;
    return none;
  }

  virtual bool entails(const Assertion& psi, const Condition& cond) const = 0;

  // Normal form of a term with the assertion's bindings expanded.
  virtual Term evaluate(const Assertion& psi, const Term& t) const {
    (void)psi;
    return t;
  }

  virtual std::vector<Term> term_domain(const NameSet& pool, const DomainConfig& dom) const = 0;

  virtual std::vector<Condition> probe_conditions(const NameSet& pool,
                                                  const DomainConfig& dom) const = 0;

  virtual std::vector<Assertion> assertion_domain(const NameSet& pool,
                                                  const DomainConfig& dom) const {
    (void)pool;
    (void)dom;
    return {Assertion::unit()};
  }

  // All K with entails(psi, M <-> K), complete for the bounded term
  // domain over the pool; M itself is always considered.
  virtual std::vector<Term> channel_candidates(const Assertion& psi, const Term& m,
                                               const NameSet& pool,
                                               const DomainConfig& dom) const {
    NameSet full = pool;
    collect_support(m, full);
    collect_support(psi, full);
    std::vector<Term> cands = term_domain(full, dom);
    cands.push_back(m);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    std::vector<Term> out;
    for (const Term& k : cands)
      if (entails(psi, chan_eq(m, k))) out.push_back(k);
    return out;
  }
};

const Instance& registry_lookup(const std::string& key);
std::vector<std::string> registry_keys();

}  // namespace psi

#endif  // PSI_INSTANCE_HPP

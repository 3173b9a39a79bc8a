#ifndef PSI_NAMES_HPP
#define PSI_NAMES_HPP

#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace psi {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Atomic names. Identity is the id; the display string is cosmetic and
// kept in a side table so values stay trivially copyable.
class Name {
 public:
  Name() : id_(0) {}
  explicit Name(std::uint64_t id) : id_(id) {}

  std::uint64_t id() const { return id_; }

  friend bool operator==(Name a, Name b) { return a.id_ == b.id_; }
  friend bool operator!=(Name a, Name b) { return a.id_ != b.id_; }
  friend bool operator<(Name a, Name b) { return a.id_ < b.id_; }

 private:
  std::uint64_t id_;
};

using NameSeq = std::vector<Name>;
using NameSet = std::set<Name>;

// Id ranges. Interned (user) names grow from 0; generated names live in
// disjoint ranges so they can never collide with parsed input.
inline constexpr std::uint64_t kFreshBase = std::uint64_t(1) << 40;
inline constexpr std::uint64_t kCanonBase = std::uint64_t(1) << 50;

class NameTable {
 public:
  static NameTable& instance() {
    static NameTable t;
    return t;
  }

  Name intern(const std::string& display) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_display_.find(display);
    if (it != by_display_.end()) return it->second;
    Name n(next_interned_++);
    by_display_.emplace(display, n);
    display_.emplace(n.id(), display);
    return n;
  }

  Name fresh(const std::string& hint) {
    std::lock_guard<std::mutex> lock(mu_);
    Name n(kFreshBase + next_fresh_++);
    display_.emplace(n.id(), hint + std::to_string(next_fresh_ - 1));
    return n;
  }

  Name canon(std::uint64_t index) const { return Name(kCanonBase + index); }

  std::string display(Name n) const {
    if (n.id() >= kCanonBase) return "#" + std::to_string(n.id() - kCanonBase);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = display_.find(n.id());
    if (it != display_.end()) return it->second;
    return "?" + std::to_string(n.id());
  }

 private:
  NameTable() = default;
  mutable std::mutex mu_;
  std::map<std::string, Name> by_display_;
  std::map<std::uint64_t, std::string> display_;
  std::uint64_t next_interned_ = 0;
  std::uint64_t next_fresh_ = 0;
};

inline Name intern(const std::string& s) { return NameTable::instance().intern(s); }
inline std::string display(Name n) { return NameTable::instance().display(n); }

// Supplies names guaranteed distinct from all previously generated ones
// and from the avoid set. One session per logical derivation task.
struct FreshSession {
  NameSet avoid;

  FreshSession() = default;
  explicit FreshSession(NameSet av) : avoid(std::move(av)) {}

  Name fresh(const std::string& hint = "y") {
    for (;;) {
      Name n = NameTable::instance().fresh(hint);
      if (!avoid.count(n)) return n;
    }
  }
};

// Derived rename for capture avoidance: base display plus a primed suffix,
// first candidate not in avoid. Deterministic for fixed inputs.
inline Name freshen(Name base, const NameSet& avoid) {
  const std::string stem = display(base);
  for (int k = 1;; ++k) {
    Name cand = intern(stem + "'" + std::to_string(k));
    if (!avoid.count(cand)) return cand;
  }
}

inline Name swap_name(Name a, Name b, Name x) {
  if (x == a) return b;
  if (x == b) return a;
  return x;
}

inline bool has_duplicates(const NameSeq& xs) {
  NameSet seen;
  for (Name x : xs)
    if (!seen.insert(x).second) return true;
  return false;
}

inline NameSet to_set(const NameSeq& xs) { return NameSet(xs.begin(), xs.end()); }

}  // namespace psi

#endif  // PSI_NAMES_HPP

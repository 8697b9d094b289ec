#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "scv/machine.hpp"

namespace scv {

using StoreReader = std::function<const ValueSet&(const Addr&)>;

// Addresses reachable from `v` through closure environments and contract or
// wrapper addresses. Sorted; never contains the leak address.
std::vector<Addr> reachable_slice(const Value& v, const StoreReader& read);

struct Fingerprint {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

// Hash of `v` together with the store contents on its reachable slice.
Fingerprint fingerprint(const Value& v, const StoreReader& read);

// Remembers which leaked values havoc has already run, and the slice they
// were run against.
class HavocMemo {
 public:
  bool should_rerun(const Value& v, const StoreReader& read);
  std::size_t size() const { return seen_.size(); }
  std::uint64_t hits() const { return hits_; }

 private:
  std::unordered_map<Value, Fingerprint, ValueHash> seen_;
  std::uint64_t hits_ = 0;
};

}  // namespace scv

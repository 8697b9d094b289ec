#include "scv/havoc.hpp"

#include <algorithm>
#include <set>

namespace scv {

namespace {

void children(const Value& v, std::vector<Addr>& out) {
  switch (v.kind) {
    case ValueKind::Clo:
      if (v.env) {
        for (const auto& [x, a] : v.env->slots) out.push_back(a);
      }
      break;
    case ValueKind::Grd:
    case ValueKind::Arr:
      out.push_back(v.a1);
      out.push_back(v.a2);
      break;
    case ValueKind::Prim:
      if (v.partial) children(*v.partial, out);
      break;
    default:
      break;
  }
}

std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
  h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 31;
  h *= 0xbf58476d1ce4e5b9ULL;
  return h ^ (h >> 29);
}

}  // namespace

std::vector<Addr> reachable_slice(const Value& v, const StoreReader& read) {
  std::set<Addr> seen;
  std::vector<Addr> todo;
  children(v, todo);
  while (!todo.empty()) {
    Addr a = todo.back();
    todo.pop_back();
    if (a.is_leak() || !seen.insert(a).second) continue;
    for (const auto& w : read(a)) children(w, todo);
  }
  return {seen.begin(), seen.end()};
}

Fingerprint fingerprint(const Value& v, const StoreReader& read) {
  Fingerprint f{mix(1, v.hash), mix(2, v.hash)};
  for (const Addr& a : reachable_slice(v, read)) {
    // value sets are unordered, so their hashes are combined commutatively
    std::uint64_t sum = 0, prod = 1;
    for (const auto& w : read(a)) {
      sum += mix(3, w.hash);
      prod *= mix(4, w.hash) | 1;
    }
    f.lo = mix(mix(f.lo, a.hash()), sum);
    f.hi = mix(mix(f.hi, a.hash() ^ 0x5555), prod);
  }
  return f;
}

bool HavocMemo::should_rerun(const Value& v, const StoreReader& read) {
  Fingerprint f = fingerprint(v, read);
  auto [it, fresh] = seen_.try_emplace(v, f);
  if (fresh) return true;
  if (it->second == f) {
    ++hits_;
    return false;
  }
  it->second = f;
  return true;
}

}  // namespace scv

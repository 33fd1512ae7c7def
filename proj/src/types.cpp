#include "ccacr/types.hpp"

#include <algorithm>

namespace ccacr {

std::string CombinedType::label() const {
  const char* prefix = kind == CombinedKind::Complier      ? "cc"
                       : kind == CombinedKind::NonResponder ? "cn"
                                                            : "cd";
  return std::string(prefix) + "_{" + std::to_string(d00) + "," +
         std::to_string(d11) + "}";
}

MonotonicityRule MonotonicityRule::lim(bool positive) {
  MonotonicityRule r;
  r.variant = Variant::LiM;
  r.positive = positive;
  return r;
}

MonotonicityRule MonotonicityRule::pm(std::vector<int> directions) {
  for (int d : directions)
    if (d != 1 && d != -1) throw DataError("PM directions must be +1 or -1");
  MonotonicityRule r;
  r.variant = Variant::PM;
  r.pm_directions = std::move(directions);
  return r;
}

MonotonicityRule MonotonicityRule::iam(std::vector<int> order) {
  MonotonicityRule r;
  r.variant = Variant::IAM;
  r.iam_order = std::move(order);
  return r;
}

std::vector<ResponseType> enumerate_types(int J, int K, std::uint64_t cap) {
  if (J < 1 || K < 1) throw DataError("require J >= 1 and K >= 1");
  const std::size_t n_assign = std::size_t{1} << K;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n_assign; ++i) {
    total *= static_cast<std::uint64_t>(J + 1);
    if (total > cap)
      throw DataError("type count (J+1)^(2^K) exceeds cap of " +
                      std::to_string(cap));
  }
  std::vector<ResponseType> out;
  out.reserve(total);
  ResponseType t;
  t.n_instruments = K;
  t.potentials.assign(n_assign, 0);
  for (std::uint64_t i = 0; i < total; ++i) {
    out.push_back(t);
    // odometer increment, last assignment fastest
    for (std::size_t pos = n_assign; pos-- > 0;) {
      if (++t.potentials[pos] <= J) break;
      t.potentials[pos] = 0;
    }
  }
  return out;
}

bool classify(const ResponseType& t, const MonotonicityRule& rule) {
  const int K = t.n_instruments;
  const std::size_t n_assign = t.potentials.size();
  switch (rule.variant) {
    case MonotonicityRule::Variant::None:
      return true;
    case MonotonicityRule::Variant::LiM:
      return rule.positive ? t.d_all_one() >= t.d_all_zero()
                           : t.d_all_one() <= t.d_all_zero();
    case MonotonicityRule::Variant::PM: {
      if (static_cast<int>(rule.pm_directions.size()) != K)
        throw DataError("PM rule needs exactly K directions");
      for (int k = 0; k < K; ++k) {
        const std::size_t bit = std::size_t{1} << (K - 1 - k);
        const int dir = rule.pm_directions[static_cast<std::size_t>(k)];
        for (std::size_t a = 0; a < n_assign; ++a) {
          if (a & bit) continue;
          const int diff = t.potentials[a | bit] - t.potentials[a];
          if (dir * diff < 0) return false;
        }
      }
      return true;
    }
    case MonotonicityRule::Variant::IAM: {
      if (rule.iam_order.size() != n_assign)
        throw DataError("IAM order must cover all 2^K assignments");
      for (std::size_t m = 1; m < n_assign; ++m) {
        const int prev = t.potentials[static_cast<std::size_t>(rule.iam_order[m - 1])];
        const int cur = t.potentials[static_cast<std::size_t>(rule.iam_order[m])];
        if (cur < prev) return false;
      }
      return true;
    }
  }
  return true;
}

CombinedType aggregate_combined(const ResponseType& t) {
  CombinedType c;
  c.d00 = t.d_all_zero();
  c.d11 = t.d_all_one();
  c.kind = c.d11 > c.d00   ? CombinedKind::Complier
           : c.d11 < c.d00 ? CombinedKind::Defier
                           : CombinedKind::NonResponder;
  return c;
}

std::vector<int> type_signs(const ResponseType& t,
                            const std::vector<int>& assignment_order) {
  if (assignment_order.size() != t.potentials.size())
    throw DataError("assignment order must cover all 2^K assignments");
  std::vector<int> signs;
  signs.reserve(assignment_order.size() - 1);
  for (std::size_t m = 1; m < assignment_order.size(); ++m) {
    const int diff =
        t.potentials[static_cast<std::size_t>(assignment_order[m])] -
        t.potentials[static_cast<std::size_t>(assignment_order[m - 1])];
    signs.push_back(diff > 0 ? 1 : diff < 0 ? -1 : 0);
  }
  return signs;
}

}  // namespace ccacr

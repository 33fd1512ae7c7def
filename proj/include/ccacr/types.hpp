#ifndef CCACR_TYPES_HPP_
#define CCACR_TYPES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ccacr/common.hpp"

namespace ccacr {

/// A response type: the potential treatment level at every instrument
/// assignment. Assignments are indexed by the integer whose binary digits
/// are (z_1 z_2 ... z_K), so index 0 is all-zeros and index 2^K-1 is
/// all-ones.
struct ResponseType {
  int n_instruments = 0;
  std::vector<int> potentials;  // length 2^K, values in 0..J

  int d_all_zero() const { return potentials.front(); }
  int d_all_one() const { return potentials.back(); }
};

enum class CombinedKind { Complier, NonResponder, Defier };

struct CombinedType {
  int d00 = 0;  // level at the all-zero assignment
  int d11 = 0;  // level at the all-one assignment
  CombinedKind kind = CombinedKind::NonResponder;

  std::string label() const;
};

struct MonotonicityRule {
  enum class Variant { None, LiM, PM, IAM };
  Variant variant = Variant::None;
  /// PM only: +1 or -1 per instrument.
  std::vector<int> pm_directions;
  /// IAM only: total order of the 2^K assignment indices; the type's
  /// potentials must be weakly non-decreasing along it.
  std::vector<int> iam_order;
  /// LiM orientation: true means d11 >= d00 (the default).
  bool positive = true;

  static MonotonicityRule none() { return {}; }
  static MonotonicityRule lim(bool positive = true);
  static MonotonicityRule pm(std::vector<int> directions);
  static MonotonicityRule iam(std::vector<int> order);
};

/// All (J+1)^(2^K) response types in lexicographic order over the
/// assignment-ordered potentials.
std::vector<ResponseType> enumerate_types(int J, int K,
                                          std::uint64_t cap = 1000000);

bool classify(const ResponseType& t, const MonotonicityRule& rule);

CombinedType aggregate_combined(const ResponseType& t);

/// Per adjacent pair in the assignment order: sign of the potential
/// treatment change, in {-1, 0, +1}.
std::vector<int> type_signs(const ResponseType& t,
                            const std::vector<int>& assignment_order);

}  // namespace ccacr

#endif  // CCACR_TYPES_HPP_

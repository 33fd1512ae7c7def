#ifndef CCACR_DATASET_HPP_
#define CCACR_DATASET_HPP_

#include <map>
#include <string>
#include <vector>

#include "ccacr/common.hpp"

namespace ccacr {

/// Raw analysis unit: outcome, treatment, K binary instrument columns and
/// a covariate matrix.
struct IvDataset {
  std::vector<double> y;
  std::vector<double> d;
  Matrix z;  // n x K, entries in {0,1}
  Matrix x;  // n x p
  std::vector<std::string> instrument_names;
  std::vector<std::string> covariate_names;

  std::size_t n() const { return y.size(); }
  std::size_t n_instruments() const { return z.cols(); }
  std::size_t n_covariates() const { return x.cols(); }
};

/// Outer-support subsample with the single constructed instrument z~.
/// Each retained row had all instruments equal (all 1 -> z_tilde 1,
/// all 0 -> z_tilde 0).
struct CollapsedSample {
  std::vector<std::size_t> parent_indices;
  std::vector<int> z_tilde;
  std::vector<double> y;
  std::vector<double> d;
  Matrix x;
  std::vector<std::string> covariate_names;
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  std::size_t dropped = 0;  // rows with mixed instrument values

  std::size_t n() const { return z_tilde.size(); }
};

struct TreatmentEncoding {
  std::vector<double> levels;            // sorted distinct observed values
  std::map<double, int> codes;           // level -> rank 0..J
  bool non_consecutive_warning = false;  // levels are not consecutive integers

  int max_code() const { return static_cast<int>(levels.size()) - 1; }
  double decode(int code) const { return levels.at(static_cast<std::size_t>(code)); }
};

struct BinarizedInstrument {
  std::vector<int> values;  // binary, defined on unmasked rows only
  std::vector<bool> kept;   // mask, same length as input
  double low_cutoff = 0.0;
  double high_cutoff = 0.0;
};

/// Single named column from a CSV file.
std::vector<double> load_column(const std::string& path,
                                const std::string& column);

IvDataset load_csv(const std::string& path, const std::string& outcome,
                   const std::string& treatment,
                   const std::vector<std::string>& instruments,
                   const std::vector<std::string>& covariates);

CollapsedSample collapse_instruments(const IvDataset& data);

/// Maps values at or below the low-percentile cutoff to 0, at or above the
/// high-percentile cutoff to 1, and masks out strictly interior rows.
/// Cutoffs are type-7 quantiles.
BinarizedInstrument binarize_instrument(const std::vector<double>& values,
                                        double low_percentile = 0.25,
                                        double high_percentile = 0.75);

std::pair<std::vector<int>, TreatmentEncoding> encode_treatment_levels(
    const std::vector<double>& d);

}  // namespace ccacr

#endif  // CCACR_DATASET_HPP_

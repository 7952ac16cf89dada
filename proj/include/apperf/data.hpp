#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apperf/types.hpp"

namespace apperf {

struct Dataset {
  Matrix x;  // samples x features
  Labels y;
  std::vector<std::string> columns;

  int size() const { return static_cast<int>(y.size()); }
  int features() const { return static_cast<int>(columns.size()); }
  Dataset subset(const std::vector<int>& rows) const;
};

// CSV with a header row. Quoted fields and "" escapes are accepted; every
// non-label cell must be numeric and labels must be 0 or 1.
Dataset parse_csv(std::string_view text, const std::string& label_column,
                  const std::string& source = "<memory>");
Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column = "label");
void save_csv(const std::filesystem::path& path, const Dataset& ds,
              const std::string& label_column = "label");

struct Standardization {
  std::vector<std::string> columns;
  Vector mean, scale;
};

// Fits mean and population std per column. Zero-variance columns are left out
// and reported in warnings.
Standardization fit_standardization(const Dataset& ds,
                                    std::vector<std::string>* warnings = nullptr);
// Selects the fitted columns by name and standardizes them.
Dataset apply_standardization(const Dataset& ds, const Standardization& st);

struct Split {
  Dataset train, val, test;
  Standardization standardization;
  std::vector<std::string> warnings;
};

// Seeded shuffle, then train_frac of the rows go to train+val and
// val_frac_of_train of those to val. Standardization is fit on train only.
Split split_dataset(const Dataset& ds, double train_frac = 0.7,
                    double val_frac_of_train = 0.2, std::uint64_t seed = 0);

struct SynthConfig {
  int samples = 2000;
  double positive_fraction = 0.05;
  double separation = 1.5;  // positives centred at (s, s), negatives at 0
  std::uint64_t seed = 0;
};

// Two unit-variance 2-D Gaussian classes with an exact positive count.
Dataset synthetic_gaussians(const SynthConfig& cfg);

}  // namespace apperf

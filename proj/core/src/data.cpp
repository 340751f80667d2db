#include "pacf/data.hpp"

#include <string>

#include "pacf/error.hpp"

namespace pacf {

std::size_t common_dimension(std::span<const FeatureVector> rows) {
  if (rows.empty()) return 0;
  const std::size_t dim = rows.front().size();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(i) + " has dimension " +
                                                    std::to_string(rows[i].size()) +
                                                    ", expected " + std::to_string(dim));
    }
  }
  return dim;
}

void LabeledBatch::validate() const {
  common_dimension(features);
  require_same_size(features.size(), labels.size(), "labeled batch labels");
  if (!scores.empty()) require_same_size(features.size(), scores.size(), "labeled batch scores");
}

}  // namespace pacf

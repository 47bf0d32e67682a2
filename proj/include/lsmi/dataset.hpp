#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace lsmi {

/// One multimodal observation. `x[m]` holds modality m (x1 is x[0]).
struct Sample {
  std::int64_t id = 0;
  std::vector<std::vector<double>> x;
  int y = 0;
  std::string tag;  ///< generator metadata (e.g. preset interaction type)
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::size_t> dims;  ///< per modality
  int num_classes = 0;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t modalities() const noexcept { return dims.size(); }

  /// Throws invalid_input on empty data, ragged shapes or labels >= K.
  void validate() const;

  std::vector<int> labels() const;

  /// Row-major n x dims[m] copy of one modality.
  std::vector<double> modality_matrix(std::size_t m) const;

  /// Row-major n x (dims[a] + dims[b]) concatenation of two modalities.
  std::vector<double> concat_matrix(std::size_t a, std::size_t b) const;

  Dataset subset(std::span<const std::size_t> rows) const;
};

}  // namespace lsmi

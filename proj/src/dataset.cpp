#include "lsmi/dataset.hpp"

#include <string>

#include "lsmi/error.hpp"

namespace lsmi {

void Dataset::validate() const {
  require(!samples.empty(), ErrorKind::empty_input, "dataset is empty");
  require(!dims.empty(), ErrorKind::invalid_input, "dataset has no modalities");
  require(num_classes > 0, ErrorKind::invalid_input,
          "class count must be positive");
  for (std::size_t d : dims)
    require(d > 0, ErrorKind::invalid_input, "modality dims must be positive");
  for (const auto& s : samples) {
    require(s.x.size() == dims.size(), ErrorKind::invalid_input,
            "sample " + std::to_string(s.id) + " has wrong modality count");
    for (std::size_t m = 0; m < dims.size(); ++m)
      require(s.x[m].size() == dims[m], ErrorKind::invalid_input,
              "sample " + std::to_string(s.id) + " modality " +
                  std::to_string(m + 1) + " has wrong dimension");
    require(s.y >= 0 && s.y < num_classes, ErrorKind::invalid_input,
            "sample " + std::to_string(s.id) + " label out of range");
  }
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.y);
  return out;
}

std::vector<double> Dataset::modality_matrix(std::size_t m) const {
  std::vector<double> out;
  out.reserve(samples.size() * dims.at(m));
  for (const auto& s : samples) out.insert(out.end(), s.x[m].begin(), s.x[m].end());
  return out;
}

std::vector<double> Dataset::concat_matrix(std::size_t a, std::size_t b) const {
  std::vector<double> out;
  out.reserve(samples.size() * (dims.at(a) + dims.at(b)));
  for (const auto& s : samples) {
    out.insert(out.end(), s.x[a].begin(), s.x[a].end());
    out.insert(out.end(), s.x[b].begin(), s.x[b].end());
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dims = dims;
  out.num_classes = num_classes;
  out.provenance = provenance;
  out.samples.reserve(rows.size());
  for (std::size_t r : rows) out.samples.push_back(samples.at(r));
  return out;
}

}  // namespace lsmi

#pragma once

#include <string_view>
#include <vector>

namespace ecgstress {

enum class Modality { hrv, cnn1d, cnn2d, fused };

std::string_view to_string(Modality modality);

struct FeatureVector {
  Modality modality = Modality::hrv;
  std::vector<double> values;
};

}  // namespace ecgstress

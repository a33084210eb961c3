#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecgstress/matrix.hpp"

namespace ecgstress {

// Eigenvector sign: the first component with magnitude above kSignEpsilon is
// made nonnegative.
inline constexpr double kSignEpsilon = 1e-12;
inline constexpr const char* kSignConvention = "first_nonzero_nonnegative";

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

// Un-centered Gram matrix F^T F.
Matrix gram_covariance(const Matrix& features);

// Cyclic Jacobi rotations until the off-diagonal norm falls below 1e-12 of
// ||A||_F. Throws InputError if A is not symmetric within 1e-10.
EigenDecomposition eig_sym(const Matrix& a);

// Top eigenvector of F^T F. Falls back to the uniform unit vector when the
// Gram matrix is numerically zero.
std::vector<double> principal_weights(const Matrix& features);

struct FusionWeights {
  std::vector<double> w1;
  std::vector<double> w2;
  std::string sign_convention = kSignConvention;

  bool operator==(const FusionWeights&) const = default;
};

FusionWeights compute_fusion_weights(const Matrix& f1, const Matrix& f2);

// Column j of the result is w1[j] * F1[:, j] + w2[j] * F2[:, j]. Weights are
// derived from F1 and F2 when not supplied.
Matrix weighted_fuse(const Matrix& f1, const Matrix& f2, const std::optional<FusionWeights>& weights = {});

// 0.5 * F1 + 0.5 * F2.
Matrix average_fuse(const Matrix& f1, const Matrix& f2);

}  // namespace ecgstress

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ttp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Named view of a trainable tensor (matrix or vector) used by the optimizer
/// and the checkpoint writer. Data is Eigen column-major.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool is_vector = false;

  Eigen::Index size() const { return rows * cols; }
};

inline ParamRef param_ref(std::string name, Matrix& m) { return {std::move(name), m.data(), m.rows(), m.cols(), false}; }
inline ParamRef param_ref(std::string name, Vector& v) { return {std::move(name), v.data(), v.size(), 1, true}; }

/// Uniform fill in [-bound, bound].
template <typename Derived, typename RngT>
void fill_uniform(Eigen::PlainObjectBase<Derived>& m, double bound, RngT& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

}  // namespace ttp

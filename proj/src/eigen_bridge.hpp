#pragma once

// Zero-copy views between lrmr::Mat (column-major) and Eigen.

#include <Eigen/Dense>

#include "lrmr/mat.hpp"

namespace lrmr::detail {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using MutMap = Eigen::Map<Eigen::MatrixXd>;

inline ConstMap view(const Mat& x) {
  return ConstMap(x.data().data(), static_cast<Eigen::Index>(x.rows()),
                  static_cast<Eigen::Index>(x.cols()));
}

inline MutMap view(Mat& x) {
  return MutMap(x.data().data(), static_cast<Eigen::Index>(x.rows()),
                static_cast<Eigen::Index>(x.cols()));
}

inline Mat from_eigen(const Eigen::MatrixXd& m) {
  Mat out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  view(out) = m;
  return out;
}

}  // namespace lrmr::detail

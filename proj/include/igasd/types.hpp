#pragma once

#include <Eigen/Dense>
#include <complex>

namespace igasd {

// Row-major throughout: the detector sweeps rows of the channel matrix and
// component-wise parameter blocks, so contiguous rows are the layout that
// matters.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

} // namespace igasd

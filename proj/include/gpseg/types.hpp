#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace gpseg {

// Grayscale field; row index is the first lattice axis, column index the second.
using GrayImage = Eigen::MatrixXd;

// 0 = background, 1 = foreground.
using BinaryMask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// 0 = background, objects labeled 1..K.
using LabelMask = Eigen::MatrixXi;

}  // namespace gpseg

#pragma once

#include "dnls/grid.hpp"

namespace dnls {

/// Multiply by exp(i*beta * int_{-inf}^x |u|^2); preserves |u| pointwise.
/// beta = -1/2 maps to the Kaup-Newell form, 1/4 to Gerdzhikov-Ivanov,
/// 1/2 to the quintic form.  Requires |u| below kBoundaryTolerance at the
/// box edges.
Field gauge_transform(const Field& u, double beta);

/// L2-invariant rescaling u_lambda(x) = lambda^{-1/2} u(x/lambda) on a grid
/// of length lambda * L with the same sample count.
Field scaling_transform(const Field& u, double lambda);

/// Change to the frame moving at speed sigma anchored at x_ref:
/// v(x) = exp(-i*sigma/2*(x + sigma*t/2)) * u(x + x_ref + sigma*t).
/// The translation is a spectral shift; the translated field must still be
/// contained in the box.
Field galilean_frame(const Field& u, double sigma, double x_ref, double t);

}  // namespace dnls

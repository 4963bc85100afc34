#pragma once

#include "mtr/model.hpp"
#include "mtr/spectral.hpp"

namespace mtr::testing {

/// p_x-type threshold model on a 16^3 grid, L = 8, tuned once per process.
const ThresholdModel& small_model();
/// Gaussian-azimuthal vector potential on the small model's grid.
const VectorField& small_field();
const ResonanceCoefficients& small_coefficients();

/// Seeded random fields.
RealField random_real(const GridSpec& g, unsigned seed);
ComplexField random_complex(const GridSpec& g, unsigned seed);
VectorField random_vector(const GridSpec& g, unsigned seed);

}  // namespace mtr::testing

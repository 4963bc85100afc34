#include "fixture.hpp"

#include <random>

namespace mtr::testing {

const ThresholdModel& small_model() {
  static const ThresholdModel m = [] {
    PotentialSpec spec{PotentialFamily::anisotropic_gaussian, 1.5, 2.1, 0.0, {}};
    TuningOptions opts;
    opts.gamma_lo = 2.0;
    opts.gamma_hi = 7.0;
    return tune_coupling(spec, build_grid(8.0, 16), Parity{-1, 1, 1}, opts);
  }();
  return m;
}

const VectorField& small_field() {
  static const VectorField a = eval_vector_potential(
      VectorPotentialSpec{VectorPotentialFamily::gaussian_azimuthal, 1.0, 2.0, {}}, small_model().grid());
  return a;
}

const ResonanceCoefficients& small_coefficients() {
  static const ResonanceCoefficients c = compute_coefficients(small_model(), small_field(), 1e-12);
  return c;
}

RealField random_real(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  RealField f(g);
  for (auto& v : f.values()) v = d(rng);
  return f;
}

ComplexField random_complex(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  ComplexField f(g);
  for (auto& v : f.values()) v = cplx(d(rng), d(rng));
  return f;
}

VectorField random_vector(const GridSpec& g, unsigned seed) {
  return VectorField(random_real(g, seed), random_real(g, seed + 1), random_real(g, seed + 2));
}

}  // namespace mtr::testing

#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/geometry.hpp"
#include "scenegen/rng.hpp"

namespace scenegen::mol {

inline constexpr int kDim = 12;
inline constexpr double kScaleFloor = 1e-4;  // keeps the density bounded

struct LogisticComponent {
  std::array<double, kDim> mu{};
  std::array<double, kDim> s{};  // strictly positive, >= kScaleFloor
};

struct MixtureOfLogistics {
  std::vector<double> weights;  // simplex
  std::vector<LogisticComponent> components;

  int k() const { return static_cast<int>(components.size()); }
};

// Throws ValidationError if weights are off the simplex, scales are below
// the floor, or sizes disagree.
void validate(const MixtureOfLogistics& m);

// log p(x) with per-dimension logistic pdf e^{-z} / (s (1+e^{-z})^2),
// z = (x - mu)/s, combined by log-sum-exp over components.
double log_density(const MixtureOfLogistics& m, const geometry::BoxVector& x);

double nll(const MixtureOfLogistics& m, const geometry::BoxVector& x);

// sum_k pi_k log pi_k, in [-log K, 0].
double entropy_term(const std::vector<double>& weights);

// nll + lambda * entropy_term.
double total_loss(const MixtureOfLogistics& m, const geometry::BoxVector& x,
                  double lambda);

// Deterministic given the component index and 12 uniforms in (0,1):
// x_d = mu_d + s_d ln(u/(1-u)).
geometry::BoxVector sample_given(const MixtureOfLogistics& m, int component,
                                 const std::array<double, kDim>& u);

// Ancestral sampling: component ~ weights, then per-dimension inverse CDF.
// Consumes exactly 13 uniform draws.
geometry::BoxVector sample(const MixtureOfLogistics& m, Rng& rng);

struct FitOptions {
  int max_iters = 100;
  double tol = 1e-6;  // stop when mean NLL improves by less than this
};

struct FitTrace {
  std::vector<double> mean_nll;     // after each iteration's M-step
  std::vector<double> weight_sums;  // simplex check, one per iteration
  int iterations = 0;
};

// EM for the mixture. E-step: logistic responsibilities. M-step: per-dim
// Newton (with backtracking) for locations and log-scales, responsibility
// averages blended toward uniform with strength lambda for the weights.
// Initialization: k-means++ centers, per-cluster MAD scales.
// Throws InsufficientData when samples.size() < K.
MixtureOfLogistics fit_em(const std::vector<geometry::BoxVector>& samples,
                          int k, double lambda, Rng& rng,
                          const FitOptions& opts = {},
                          FitTrace* trace = nullptr);

// Text serialization of one mixture ("K", then per component a weight, 12
// locations, 12 scales; 17 significant digits). Used inside the predictor
// parameter file.
void write_mixture(std::ostream& os, const MixtureOfLogistics& m);

// Reads the block written by write_mixture. `line_no` is advanced as lines
// are consumed so callers can report positions.
MixtureOfLogistics read_mixture(std::istream& is, int& line_no);

// Standalone one-mixture parameter file with a version header.
void save_mixture(const MixtureOfLogistics& m, const std::string& path);
MixtureOfLogistics load_mixture(const std::string& path);

}  // namespace scenegen::mol

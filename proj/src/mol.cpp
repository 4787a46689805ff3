#include "scenegen/mol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace scenegen::mol {

namespace {

double softplus(double t) {
  // log(1 + e^t), stable on both tails
  if (t > 0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log logistic pdf at x
double log_pdf1(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return -z - std::log(s) - 2.0 * softplus(-z);
}

double component_log_pdf(const LogisticComponent& c,
                         const geometry::BoxVector& x) {
  double lp = 0.0;
  for (int d = 0; d < kDim; ++d) lp += log_pdf1(x[d], c.mu[d], c.s[d]);
  return lp;
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double t : v) acc += std::exp(t - m);
  return m + std::log(acc);
}

}  // namespace

void validate(const MixtureOfLogistics& m) {
  if (m.components.empty() || m.weights.size() != m.components.size())
    throw ValidationError("mixture: weights/components size mismatch or empty");
  double sum = 0.0;
  for (double w : m.weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("mixture: negative or non-finite weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("mixture: weights sum to " + std::to_string(sum));
  for (const auto& c : m.components)
    for (int d = 0; d < kDim; ++d) {
      if (!std::isfinite(c.mu[d]))
        throw ValidationError("mixture: non-finite location");
      if (!(c.s[d] >= kScaleFloor) || !std::isfinite(c.s[d]))
        throw ValidationError("mixture: scale below floor");
    }
}

double log_density(const MixtureOfLogistics& m, const geometry::BoxVector& x) {
  std::vector<double> lp(m.components.size());
  for (std::size_t k = 0; k < m.components.size(); ++k)
    lp[k] = (m.weights[k] > 0.0 ? std::log(m.weights[k])
                                : -std::numeric_limits<double>::infinity()) +
            component_log_pdf(m.components[k], x);
  return logsumexp(lp);
}

double nll(const MixtureOfLogistics& m, const geometry::BoxVector& x) {
  return -log_density(m, x);
}

double entropy_term(const std::vector<double>& weights) {
  double acc = 0.0;
  for (double w : weights)
    if (w > 0.0) acc += w * std::log(w);
  return acc;
}

double total_loss(const MixtureOfLogistics& m, const geometry::BoxVector& x,
                  double lambda) {
  return nll(m, x) + lambda * entropy_term(m.weights);
}

geometry::BoxVector sample_given(const MixtureOfLogistics& m, int component,
                                 const std::array<double, kDim>& u) {
  const LogisticComponent& c = m.components[static_cast<std::size_t>(component)];
  geometry::BoxVector x{};
  for (int d = 0; d < kDim; ++d)
    x[d] = c.mu[d] + c.s[d] * std::log(u[d] / (1.0 - u[d]));
  return x;
}

geometry::BoxVector sample(const MixtureOfLogistics& m, Rng& rng) {
  const double pick = rng.uniform();
  double acc = 0.0;
  int k = m.k() - 1;
  for (int i = 0; i < m.k(); ++i) {
    acc += m.weights[static_cast<std::size_t>(i)];
    if (pick < acc) {
      k = i;
      break;
    }
  }
  std::array<double, kDim> u{};
  for (int d = 0; d < kDim; ++d) u[d] = rng.uniform_open();
  return sample_given(m, k, u);
}

namespace {

// Weighted per-dimension log-likelihood, the objective each Newton step
// must not decrease.
double dim_objective(const std::vector<geometry::BoxVector>& xs,
                     const std::vector<double>& w, int d, double mu,
                     double s) {
  double q = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (w[i] > 0.0) q += w[i] * log_pdf1(xs[i][d], mu, s);
  return q;
}

double update_location(const std::vector<geometry::BoxVector>& xs,
                       const std::vector<double>& w, int d, double mu,
                       double s) {
  for (int it = 0; it < 5; ++it) {
    double g = 0.0, h = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (w[i] <= 0.0) continue;
      const double z = (xs[i][d] - mu) / s;
      const double sg = sigmoid(z);
      g += w[i] * (2.0 * sg - 1.0);
      h += w[i] * sg * (1.0 - sg);
    }
    if (h < 1e-300) break;
    double step = g * s / (2.0 * h);  // Newton on a concave 1-d likelihood
    const double q0 = dim_objective(xs, w, d, mu, s);
    bool moved = false;
    for (int bt = 0; bt < 30; ++bt) {
      if (dim_objective(xs, w, d, mu + step, s) >= q0) {
        mu += step;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || std::abs(step) < 1e-12 * (1.0 + std::abs(mu))) break;
  }
  return mu;
}

double update_scale(const std::vector<geometry::BoxVector>& xs,
                    const std::vector<double>& w, int d, double mu, double s) {
  const double phi_floor = std::log(kScaleFloor);
  double phi = std::log(s);
  for (int it = 0; it < 5; ++it) {
    const double cur = std::exp(phi);
    double g = 0.0, h = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (w[i] <= 0.0) continue;
      const double z = (xs[i][d] - mu) / cur;
      const double sg = sigmoid(z);
      const double t = z * (2.0 * sg - 1.0);
      g += w[i] * (t - 1.0);
      h += w[i] * (-t - 2.0 * z * z * sg * (1.0 - sg));
    }
    if (std::abs(h) < 1e-300) break;
    double step = -g / h;
    const double q0 = dim_objective(xs, w, d, mu, cur);
    bool moved = false;
    for (int bt = 0; bt < 30; ++bt) {
      const double cand = std::max(phi + step, phi_floor);
      if (dim_objective(xs, w, d, mu, std::exp(cand)) >= q0) {
        phi = cand;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || std::abs(step) < 1e-12) break;
  }
  return std::exp(phi);
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
  return 0.5 * (v[n / 2 - 1] + hi);
}

constexpr double kInvLog3 = 0.9102392266268373;  // logistic MAD = s ln 3

}  // namespace

MixtureOfLogistics fit_em(const std::vector<geometry::BoxVector>& samples,
                          int k, double lambda, Rng& rng,
                          const FitOptions& opts, FitTrace* trace) {
  const std::size_t n = samples.size();
  if (k < 1) throw InsufficientData("fit_em: K must be >= 1");
  if (n < static_cast<std::size_t>(k))
    throw InsufficientData("fit_em: need at least K samples, got " +
                           std::to_string(n));

  // Global per-dimension MAD, the fallback scale for thin clusters and
  // component reinitialization.
  std::array<double, kDim> global_mad{};
  {
    std::array<double, kDim> med{};
    std::vector<double> col(n);
    for (int d = 0; d < kDim; ++d) {
      for (std::size_t i = 0; i < n; ++i) col[i] = samples[i][d];
      med[d] = median_of(col);
      for (std::size_t i = 0; i < n; ++i) col[i] = std::abs(samples[i][d] - med[d]);
      global_mad[d] = std::max(median_of(col) * kInvLog3, kScaleFloor);
    }
  }

  // k-means++ seeding of the component locations.
  std::vector<std::size_t> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(rng.index(n));
  std::vector<double> d2(n);
  auto sqdist = [&](std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (int d = 0; d < kDim; ++d) {
      const double t = samples[i][d] - samples[j][d];
      acc += t * t;
    }
    return acc;
  };
  for (std::size_t i = 0; i < n; ++i) d2[i] = sqdist(i, centers[0]);
  while (centers.size() < static_cast<std::size_t>(k)) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick;
    if (total <= 1e-300) {
      pick = rng.index(n);
    } else {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sqdist(i, pick));
  }

  MixtureOfLogistics m;
  m.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  m.components.resize(static_cast<std::size_t>(k));

  {
    // Hard assignment to the seeded centers; scales from cluster MAD.
    std::vector<int> assign(n, 0);
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = sqdist(i, centers[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = sqdist(i, centers[static_cast<std::size_t>(c)]);
        if (dd < best) {
          best = dd;
          assign[i] = c;
        }
      }
      ++count[static_cast<std::size_t>(assign[i])];
    }
    for (int c = 0; c < k; ++c) {
      auto& comp = m.components[static_cast<std::size_t>(c)];
      for (int d = 0; d < kDim; ++d)
        comp.mu[d] = samples[centers[static_cast<std::size_t>(c)]][d];
      std::vector<double> dev;
      dev.reserve(count[static_cast<std::size_t>(c)]);
      for (int d = 0; d < kDim; ++d) {
        dev.clear();
        for (std::size_t i = 0; i < n; ++i)
          if (assign[i] == c) dev.push_back(std::abs(samples[i][d] - comp.mu[d]));
        comp.s[d] = dev.size() >= 2
                        ? std::max(median_of(dev) * kInvLog3, kScaleFloor)
                        : global_mad[d];
      }
      m.weights[static_cast<std::size_t>(c)] =
          std::max<double>(static_cast<double>(count[static_cast<std::size_t>(c)]), 1.0);
    }
    double wsum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (double& w : m.weights) w /= wsum;
  }

  std::vector<std::vector<double>> resp(
      static_cast<std::size_t>(k), std::vector<double>(n, 0.0));
  std::vector<double> lp(static_cast<std::size_t>(k));

  double prev_nll = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    // E-step
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c)
        lp[static_cast<std::size_t>(c)] =
            std::log(std::max(m.weights[static_cast<std::size_t>(c)], 1e-300)) +
            component_log_pdf(m.components[static_cast<std::size_t>(c)], samples[i]);
      const double lse = logsumexp(lp);
      for (int c = 0; c < k; ++c)
        resp[static_cast<std::size_t>(c)][i] =
            std::exp(lp[static_cast<std::size_t>(c)] - lse);
    }

    // M-step
    bool reinitialized = false;
    for (int c = 0; c < k; ++c) {
      auto& rk = resp[static_cast<std::size_t>(c)];
      const double mass = std::accumulate(rk.begin(), rk.end(), 0.0);
      auto& comp = m.components[static_cast<std::size_t>(c)];
      if (mass < 1e-8) {
        // Dead component: restart it at the worst-explained sample.
        std::size_t worst = 0;
        double worst_lp = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          const double l = log_density(m, samples[i]);
          if (l < worst_lp) {
            worst_lp = l;
            worst = i;
          }
        }
        for (int d = 0; d < kDim; ++d) {
          comp.mu[d] = samples[worst][d];
          comp.s[d] = global_mad[d];
        }
        m.weights[static_cast<std::size_t>(c)] = 1.0 / static_cast<double>(n);
        reinitialized = true;
        continue;
      }
      for (int d = 0; d < kDim; ++d) {
        comp.mu[d] = update_location(samples, rk, d, comp.mu[d], comp.s[d]);
        comp.s[d] = update_scale(samples, rk, d, comp.mu[d], comp.s[d]);
      }
      m.weights[static_cast<std::size_t>(c)] = mass / static_cast<double>(n);
    }

    // Weight update: blend toward uniform with strength lambda.
    {
      double wsum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
      for (double& w : m.weights) w /= wsum;
      if (lambda > 0.0) {
        const double u = 1.0 / static_cast<double>(k);
        for (double& w : m.weights) w = (w + lambda * u) / (1.0 + lambda);
      }
      // exact renormalization keeps the simplex invariant tight
      wsum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
      for (double& w : m.weights) w /= wsum;
    }

    double mean_nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_nll += nll(m, samples[i]);
    mean_nll /= static_cast<double>(n);
    if (trace) {
      trace->mean_nll.push_back(mean_nll);
      trace->weight_sums.push_back(
          std::accumulate(m.weights.begin(), m.weights.end(), 0.0));
    }

    if (!reinitialized && prev_nll - mean_nll < opts.tol) {
      ++iter;
      break;
    }
    prev_nll = mean_nll;
  }
  if (trace) trace->iterations = iter;

  validate(m);
  return m;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

std::string next_line(std::istream& is, int& line_no) {
  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return line;
  }
  parse_fail(line_no, "unexpected end of file");
}

}  // namespace

void write_mixture(std::ostream& os, const MixtureOfLogistics& m) {
  os << "K " << m.k() << "\n";
  for (int c = 0; c < m.k(); ++c) {
    const auto& comp = m.components[static_cast<std::size_t>(c)];
    os << "component " << fmt17(m.weights[static_cast<std::size_t>(c)]) << "\n";
    os << "mu";
    for (int d = 0; d < kDim; ++d) os << " " << fmt17(comp.mu[d]);
    os << "\ns";
    for (int d = 0; d < kDim; ++d) os << " " << fmt17(comp.s[d]);
    os << "\n";
  }
}

void save_mixture(const MixtureOfLogistics& m, const std::string& path) {
  std::ostringstream os;
  os << "scenegen-mol 1\n";
  write_mixture(os, m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << os.str();
}

MixtureOfLogistics load_mixture(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  int line_no = 0;
  std::istringstream head(next_line(is, line_no));
  std::string magic;
  int version = 0;
  if (!(head >> magic >> version) || magic != "scenegen-mol")
    throw ParseError(path + ":1: not a mixture parameter file");
  if (version != 1)
    throw ParseError(path + ":1: unsupported version " + std::to_string(version));
  try {
    return read_mixture(is, line_no);
  } catch (const ParseError& e) {
    throw ParseError(path + ":" + e.what());
  }
}

MixtureOfLogistics read_mixture(std::istream& is, int& line_no) {
  std::istringstream head(next_line(is, line_no));
  std::string tag;
  int k = 0;
  if (!(head >> tag >> k) || tag != "K" || k < 1)
    parse_fail(line_no, "expected 'K <count>'");

  MixtureOfLogistics m;
  m.weights.reserve(static_cast<std::size_t>(k));
  m.components.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    std::istringstream ws(next_line(is, line_no));
    double w = 0.0;
    if (!(ws >> tag >> w) || tag != "component")
      parse_fail(line_no, "expected 'component <weight>'");
    m.weights.push_back(w);

    LogisticComponent comp;
    std::istringstream mus(next_line(is, line_no));
    if (!(mus >> tag) || tag != "mu") parse_fail(line_no, "expected 'mu ...'");
    for (int d = 0; d < kDim; ++d)
      if (!(mus >> comp.mu[d])) parse_fail(line_no, "mu: expected 12 values");
    std::istringstream ss(next_line(is, line_no));
    if (!(ss >> tag) || tag != "s") parse_fail(line_no, "expected 's ...'");
    for (int d = 0; d < kDim; ++d)
      if (!(ss >> comp.s[d])) parse_fail(line_no, "s: expected 12 values");
    m.components.push_back(comp);
  }
  try {
    validate(m);
  } catch (const ValidationError& e) {
    parse_fail(line_no, e.what());
  }
  return m;
}

}  // namespace scenegen::mol

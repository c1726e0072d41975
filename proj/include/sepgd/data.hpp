#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sepgd/loss.hpp"
#include "sepgd/rng.hpp"
#include "sepgd/stats.hpp"
#include "sepgd/tail.hpp"

namespace sepgd {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

/// Finitely supported distribution over signed examples z = y x with
/// ||z|| <= 1, together with a margin certificate: a witness w* and gamma > 0
/// such that w* . z_j >= gamma for every support point. Immutable after
/// construction.
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<Vector> support, std::vector<double> probs,
                       Vector margin_witness, double gamma)
      : support_(std::move(support)), probs_(std::move(probs)),
        w_star_(std::move(margin_witness)), gamma_(gamma) {
    validate();
    cum_probs_.resize(probs_.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < probs_.size(); ++j) {
      acc += probs_[j];
      cum_probs_[j] = acc;
    }
    cum_probs_.back() = 1.0;
  }

  const std::vector<Vector>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  const Vector& margin_witness() const { return w_star_; }
  double gamma() const { return gamma_; }
  std::size_t dim() const { return support_.front().size(); }
  std::size_t support_size() const { return support_.size(); }

  /// Unit-norm witness and the margin it certifies (at least the stated
  /// gamma, typically larger because the stored witness is not unit length).
  std::pair<Vector, double> normalized_witness() const {
    double nw = norm(w_star_);
    Vector unit(w_star_);
    for (double& v : unit) v /= nw;
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& z : support_) margin = std::min(margin, dot(unit, z));
    return {unit, margin};
  }

  std::size_t sample_index(double u01) const {
    for (std::size_t j = 0; j + 1 < cum_probs_.size(); ++j)
      if (u01 < cum_probs_[j]) return j;
    return cum_probs_.size() - 1;
  }

 private:
  void validate() const {
    if (support_.empty()) throw std::invalid_argument("DiscreteDistribution: empty support");
    if (support_.size() != probs_.size())
      throw std::invalid_argument("DiscreteDistribution: support/probs size mismatch");
    std::size_t d = support_.front().size();
    if (d == 0 || w_star_.size() != d)
      throw std::invalid_argument("DiscreteDistribution: witness dimension mismatch");
    double total = 0.0;
    for (double p : probs_) {
      if (p < 0.0) throw std::invalid_argument("DiscreteDistribution: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("DiscreteDistribution: probabilities must sum to 1");
    if (!(gamma_ > 0.0)) throw std::invalid_argument("DiscreteDistribution: gamma must be positive");
    double wn = norm(w_star_);
    if (!(wn > 0.0)) throw std::invalid_argument("DiscreteDistribution: zero margin witness");
    for (const auto& z : support_) {
      if (z.size() != d) throw std::invalid_argument("DiscreteDistribution: ragged support");
      if (norm(z) > 1.0 + 1e-12)
        throw std::invalid_argument("DiscreteDistribution: support point norm exceeds 1");
      if (dot(w_star_, z) < gamma_ - 1e-12)
        throw std::invalid_argument("DiscreteDistribution: witness does not certify gamma");
      if (dot(w_star_, z) / wn <= 0.0)
        throw std::invalid_argument("DiscreteDistribution: data not separated by witness");
    }
  }

  std::vector<Vector> support_;
  std::vector<double> probs_;
  Vector w_star_;
  double gamma_;
  std::vector<double> cum_probs_;
};

/// Three-point hard instance for the large-T regime:
///   z1 = (1, 0, 0)                  w.p. (59/64)(1 - 1/n)
///   z2 = (-1/2, 3g, 0)              w.p. (5/64)(1 - 1/n)
///   z3 = (0, -1/8, 4g + 1/4)        w.p. 1/n
/// Witness w* = (g, 1/2, 1/4) gives w* . z_j = g exactly for all j. Requires
/// gamma <= 1/8 (so ||z3|| <= 1) and n >= 35.
inline DiscreteDistribution make_bigT_instance(double gamma, long long n) {
  if (!(gamma > 0.0) || gamma > 0.125)
    throw std::invalid_argument("make_bigT_instance: gamma must lie in (0, 1/8]");
  if (n < 35) throw std::invalid_argument("make_bigT_instance: n must be >= 35");
  double inv_n = 1.0 / static_cast<double>(n);
  std::vector<Vector> support = {
      {1.0, 0.0, 0.0},
      {-0.5, 3.0 * gamma, 0.0},
      {0.0, -0.125, 4.0 * gamma + 0.25},
  };
  std::vector<double> probs = {(59.0 / 64.0) * (1.0 - inv_n), (5.0 / 64.0) * (1.0 - inv_n),
                               inv_n};
  Vector w_star = {gamma, 0.5, 0.25};
  return DiscreteDistribution(std::move(support), std::move(probs), std::move(w_star), gamma);
}

/// Two-point hard instance for the small-T regime:
///   z1 = (1, 0)        w.p. 1 - p
///   z2 = (-1/2, 3g)    w.p. p,   p = phi^{-1}(8 eps) / (72 g^2 T eta).
/// Witness w* = (g, 1/2) gives w* . z_j = g for both points.
inline DiscreteDistribution make_smallT_instance(const TailFunction& phi, double gamma,
                                                 double eps, double eta, long long steps) {
  if (!(gamma > 0.0) || gamma > 0.125)
    throw std::invalid_argument("make_smallT_instance: gamma must lie in (0, 1/8]");
  if (steps <= 0) throw std::invalid_argument("make_smallT_instance: T must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("make_smallT_instance: eta must be positive");
  if (!(eps > 0.0) || 8.0 * eps > phi.value_at_zero())
    throw std::invalid_argument("make_smallT_instance: need 0 < 8*eps <= phi(0)");
  double r = tail_inverse(phi, 8.0 * eps);
  double p = r / (72.0 * gamma * gamma * static_cast<double>(steps) * eta);
  if (!(p > 0.0) || p >= 1.0) {
    double t_min = r / (72.0 * gamma * gamma * eta);
    throw std::invalid_argument(
        "make_smallT_instance: mixture weight p = " + std::to_string(p) +
        " out of (0,1); need T > " + std::to_string(t_min));
  }
  std::vector<Vector> support = {{1.0, 0.0}, {-0.5, 3.0 * gamma}};
  std::vector<double> probs = {1.0 - p, p};
  Vector w_star = {gamma, 0.5};
  return DiscreteDistribution(std::move(support), std::move(probs), std::move(w_star), gamma);
}

/// Multiset of n i.i.d. draws from a discrete distribution, stored as
/// per-support-point counts (the order of examples never matters to the
/// consumers here: empirical risk, full-batch gradients and uniform index
/// sampling all depend on the counts only).
class Dataset {
 public:
  Dataset(DiscreteDistribution dist, std::vector<long long> counts, std::uint64_t seed)
      : dist_(std::move(dist)), counts_(std::move(counts)), seed_(seed) {
    if (counts_.size() != dist_.support_size())
      throw std::invalid_argument("Dataset: counts/support size mismatch");
    n_ = 0;
    for (long long c : counts_) {
      if (c < 0) throw std::invalid_argument("Dataset: negative count");
      n_ += c;
    }
  }

  const DiscreteDistribution& distribution() const { return dist_; }
  const std::vector<long long>& counts() const { return counts_; }
  long long size() const { return n_; }
  std::uint64_t seed() const { return seed_; }

  /// Support index of the i-th example under the canonical (sorted) order.
  std::size_t support_index_of(long long i) const {
    if (i < 0 || i >= n_) throw std::out_of_range("Dataset: example index out of range");
    long long acc = 0;
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      acc += counts_[j];
      if (i < acc) return j;
    }
    return counts_.size() - 1;
  }

 private:
  DiscreteDistribution dist_;
  std::vector<long long> counts_;
  long long n_ = 0;
  std::uint64_t seed_;
};

/// n i.i.d. categorical draws keyed by (seed); identical seeds give identical
/// datasets.
inline Dataset sample_dataset(const DiscreteDistribution& dist, long long n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample_dataset: n must be nonnegative");
  std::vector<long long> counts(dist.support_size(), 0);
  SplitMix64 rng(derive_key(seed, 0x646174ULL));
  for (long long i = 0; i < n; ++i) counts[dist.sample_index(rng.next_double())]++;
  return Dataset(dist, std::move(counts), seed);
}

/// Dataset with prescribed counts (exact-frequency constructions in tests).
inline Dataset dataset_from_counts(const DiscreteDistribution& dist,
                                   std::vector<long long> counts) {
  return Dataset(dist, std::move(counts), 0);
}

/// L(w) = sum_j p_j l(w . z_j), exact over the finite support.
inline double population_risk_exact(const Vector& w, const LossFunction& loss,
                                    const DiscreteDistribution& dist) {
  if (w.size() != dist.dim())
    throw std::invalid_argument("population_risk_exact: dimension mismatch");
  KahanSum s;
  for (std::size_t j = 0; j < dist.support_size(); ++j)
    s.add(dist.probs()[j] * loss.value(dot(w, dist.support()[j])));
  return s.value();
}

/// Empirical risk (1/n) sum_i l(w . z_i) over the sample.
inline double empirical_risk(const Vector& w, const LossFunction& loss, const Dataset& data) {
  if (w.size() != data.distribution().dim())
    throw std::invalid_argument("empirical_risk: dimension mismatch");
  if (data.size() == 0) throw std::invalid_argument("empirical_risk: empty dataset");
  KahanSum s;
  const auto& support = data.distribution().support();
  for (std::size_t j = 0; j < support.size(); ++j) {
    if (data.counts()[j] == 0) continue;
    double frac = static_cast<double>(data.counts()[j]) / static_cast<double>(data.size());
    s.add(frac * loss.value(dot(w, support[j])));
  }
  return s.value();
}

}  // namespace sepgd

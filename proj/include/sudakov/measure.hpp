#pragma once

// Product radial measures mu = mu_1 x ... x mu_M with
//   mu_k(dx_k) proportional to exp(-U_k(||x_k||_{p_k}^{p_k})),
// where U_k(x) = lambda * x^gamma is an increasing convex power potential.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sudakov/errors.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

/// Default distance of every p_k from 1.
inline constexpr double kDefaultEpsCutoff = 0.1;

/// U(x) = lambda * x^gamma on the half line; U(0) = 0.
struct Potential {
  double lambda = 1.0;
  double gamma = 1.0;

  double operator()(double x) const { return lambda * std::pow(x, gamma); }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw ConfigError("potential: lambda must be positive, got " + std::to_string(lambda));
    }
    if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
      throw ConfigError("potential: gamma must be >= 1 (convex, increasing), got " +
                        std::to_string(gamma));
    }
  }
  bool operator==(const Potential&) const = default;
};

/// q with 1/p + 1/q = 1. p == 1 gives +inf.
inline double conjugate_exponent(double p) {
  if (!(p >= 1.0)) throw DomainError("conjugate_exponent: p must be >= 1");
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

/// b(p) = [Gamma(3/p) / Gamma(1/p)]^{p/2}; makes exp(-b|x|^p) isotropic.
inline double generalized_gaussian_rate(double p) {
  return std::exp(0.5 * p * log_gamma_ratio(3.0 / p, 1.0 / p));
}

/// log |dB_p^n| = log[p (2 Gamma(1 + 1/p))^n / Gamma(n/p)].
inline double log_surface_area(std::size_t n, double p) {
  if (n < 1 || !(p >= 1.0)) throw DomainError("surface_area: need n >= 1 and p >= 1");
  const double nn = static_cast<double>(n);
  return std::log(p) + nn * (std::log(2.0) + log_gamma(1.0 + 1.0 / p)) - log_gamma(nn / p);
}

/// Cone-measure normalising surface |dB_p^n| of the unit l_p sphere.
inline double surface_area(std::size_t n, double p) {
  return checked_exp(log_surface_area(n, p), "surface_area");
}

/// One radial factor of the product measure.
struct BlockSpec {
  std::size_t n = 1;
  double p = 2.0;
  double q = 2.0;
  Potential potential;
  double b = 0.5;
  /// Coordinate multiplier; 1 until isotropic_scale() is applied.
  double scale = 1.0;

  /// Exponent of the radius law: R^{a} / lambda ~ Gamma(n / a).
  double radial_exponent() const { return p * potential.gamma; }

  /// log E R^2 for the unscaled radius.
  double log_radius_second_moment() const {
    const double a = radial_exponent();
    const double nn = static_cast<double>(n);
    return -(2.0 / a) * std::log(potential.lambda) + log_gamma_ratio((nn + 2.0) / a, nn / a);
  }

  /// log E V_i^2 for the cone-measure direction.
  double log_direction_second_moment() const {
    const double nn = static_cast<double>(n);
    return (2.0 / p) * std::log(b) + log_gamma_ratio(nn / p, (nn + 2.0) / p);
  }

  bool operator==(const BlockSpec&) const = default;
};

/// Builds a block, rejecting exponents below the cutoff 1 + eps_cutoff.
inline BlockSpec make_block(std::size_t n, double p, const Potential& potential,
                            double eps_cutoff = kDefaultEpsCutoff) {
  if (n < 1) throw ConfigError("make_block: block dimension must be >= 1");
  if (!(eps_cutoff >= 0.0)) throw ConfigError("make_block: eps_cutoff must be >= 0");
  if (!std::isfinite(p) || p < 1.0 + eps_cutoff) {
    throw ConfigError("make_block: p = " + std::to_string(p) + " is below the cutoff 1 + " +
                      std::to_string(eps_cutoff));
  }
  potential.validate();
  BlockSpec block;
  block.n = n;
  block.p = p;
  block.q = conjugate_exponent(p);
  block.potential = potential;
  block.b = generalized_gaussian_rate(p);
  block.scale = 1.0;
  return block;
}

/// Sets the scale so that every coordinate of scale * R * V has variance 1.
/// Recomputed from the unscaled moments, so applying it twice is a no-op.
inline BlockSpec isotropic_scale(BlockSpec block) {
  const double log_var = block.log_radius_second_moment() + block.log_direction_second_moment();
  if (!std::isfinite(log_var)) {
    throw NumericRangeError("isotropic_scale: coordinate variance not representable");
  }
  block.scale = checked_exp(-0.5 * log_var, "isotropic_scale");
  return block;
}

/// Product of blocks with index sets J_k partitioning [d].
class ProductMeasure {
 public:
  ProductMeasure() = default;

  /// Contiguous index sets in block order.
  ProductMeasure(std::vector<BlockSpec> blocks, double eps_cutoff = kDefaultEpsCutoff)
      : blocks_(std::move(blocks)), eps_cutoff_(eps_cutoff) {
    std::vector<std::vector<std::size_t>> sets;
    std::size_t next = 0;
    for (const auto& b : blocks_) {
      std::vector<std::size_t> j(b.n);
      std::iota(j.begin(), j.end(), next);
      next += b.n;
      sets.push_back(std::move(j));
    }
    init(std::move(sets));
  }

  ProductMeasure(std::vector<BlockSpec> blocks, std::vector<std::vector<std::size_t>> index_sets,
                 double eps_cutoff = kDefaultEpsCutoff)
      : blocks_(std::move(blocks)), eps_cutoff_(eps_cutoff) {
    init(std::move(index_sets));
  }

  std::size_t dim() const noexcept { return d_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  const std::vector<BlockSpec>& blocks() const noexcept { return blocks_; }
  const BlockSpec& block(std::size_t k) const { return blocks_.at(k); }
  const std::vector<std::size_t>& index_set(std::size_t k) const { return index_sets_.at(k); }
  const std::vector<std::vector<std::size_t>>& index_sets() const noexcept { return index_sets_; }
  /// Block owning coordinate i.
  std::size_t block_of(std::size_t i) const { return owner_.at(i); }
  /// Position of coordinate i inside its block.
  std::size_t slot_of(std::size_t i) const { return slot_.at(i); }
  double eps_cutoff() const noexcept { return eps_cutoff_; }
  bool contiguous() const noexcept { return contiguous_; }

  double min_p() const {
    double m = kInf;
    for (const auto& b : blocks_) m = std::min(m, b.p);
    return m;
  }
  double max_p() const {
    double m = 0.0;
    for (const auto& b : blocks_) m = std::max(m, b.p);
    return m;
  }

  /// Copy with every block rescaled to isotropic position.
  ProductMeasure isotropic() const {
    ProductMeasure out = *this;
    for (auto& b : out.blocks_) b = isotropic_scale(b);
    return out;
  }

 private:
  void init(std::vector<std::vector<std::size_t>> sets) {
    if (blocks_.empty()) throw ConfigError("measure: at least one block is required");
    if (sets.size() != blocks_.size()) {
      throw ConfigError("measure: index_sets must have one entry per block");
    }
    for (const auto& b : blocks_) {
      if (b.p < 1.0 + eps_cutoff_ - 1e-15) {
        throw ConfigError("measure: block exponent " + std::to_string(b.p) +
                          " is below the cutoff 1 + " + std::to_string(eps_cutoff_));
      }
    }
    d_ = 0;
    for (const auto& s : sets) d_ += s.size();
    owner_.assign(d_, d_);
    slot_.assign(d_, 0);
    contiguous_ = true;
    std::size_t expect = 0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      if (sets[k].size() != blocks_[k].n) {
        throw ConfigError("measure: |J_" + std::to_string(k) + "| != n_" + std::to_string(k));
      }
      for (std::size_t s = 0; s < sets[k].size(); ++s) {
        const std::size_t i = sets[k][s];
        if (i >= d_) throw ConfigError("measure: index " + std::to_string(i) + " outside [d]");
        if (owner_[i] != d_) {
          throw ConfigError("measure: index sets are not disjoint at " + std::to_string(i));
        }
        owner_[i] = k;
        slot_[i] = s;
        if (i != expect) contiguous_ = false;
        ++expect;
      }
    }
    index_sets_ = std::move(sets);
  }

  std::vector<BlockSpec> blocks_;
  std::vector<std::vector<std::size_t>> index_sets_;
  std::vector<std::size_t> owner_;
  std::vector<std::size_t> slot_;
  std::size_t d_ = 0;
  double eps_cutoff_ = kDefaultEpsCutoff;
  bool contiguous_ = true;
};

}  // namespace sudakov

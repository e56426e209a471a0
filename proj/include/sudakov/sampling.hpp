#pragma once

// Exact samplers for the polar factorisation X_k = scale * R_k * V_k and for
// the independent-coordinate companion Y_k = R~_k * V_k.
//
// Generalized-Gaussian coordinates |x| = (G / b)^{1/p}, G ~ Gamma(1/p), carry
// all the work: a normalised vector of them is cone distributed on the l_p
// sphere, and radii reduce to one Gamma draw through u = lambda * s^{p gamma}.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sudakov/errors.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/rng.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

/// One draw of a block together with its polar parts.
struct BlockSample {
  std::vector<double> v;  // cone direction, ||v||_p = 1
  double r = 0.0;         // radius
  std::vector<double> x;  // scale * r * v
};

/// Symmetric variable with density proportional to exp(-rate * |x|^p).
inline double sample_generalized_gaussian(double p, double rate, RngStream& rng) {
  if (p == 2.0) return rng.normal() / std::sqrt(2.0 * rate);
  const double g = rng.gamma(1.0 / p);
  return rng.sign() * std::pow(g / rate, 1.0 / p);
}

/// Cone-measure direction on the unit l_p sphere of R^n, written into out.
inline void sample_cone(const BlockSpec& block, RngStream& rng, std::span<double> out) {
  if (out.size() != block.n) throw ConfigError("sample_cone: output size != n");
  if (block.n == 1) {
    out[0] = rng.sign();
    return;
  }
  double norm = 0.0;
  do {
    for (auto& x : out) x = sample_generalized_gaussian(block.p, 1.0, rng);
    norm = lp_norm(out, block.p);
  } while (norm == 0.0);
  for (auto& x : out) x /= norm;
}

inline std::vector<double> sample_cone(const BlockSpec& block, RngStream& rng) {
  std::vector<double> v(block.n);
  sample_cone(block, rng, v);
  return v;
}

/// Radius with density proportional to s^{n-1} exp(-lambda s^{a}), a = p gamma.
inline double sample_radius_law(std::size_t n, double a, double lambda, RngStream& rng) {
  const double g = rng.gamma(static_cast<double>(n) / a);
  return std::pow(g / lambda, 1.0 / a);
}

/// R_k: radius of the block law (unscaled).
inline double sample_radius(const BlockSpec& block, RngStream& rng) {
  return sample_radius_law(block.n, block.radial_exponent(), block.potential.lambda, rng);
}

/// R~_k: radius of the product generalized-Gaussian law.
inline double sample_radius_tilde(const BlockSpec& block, RngStream& rng) {
  return sample_radius_law(block.n, block.p, block.b, rng);
}

inline BlockSample sample_block(const BlockSpec& block, RngStream& rng) {
  BlockSample s;
  s.v = sample_cone(block, rng);
  s.r = sample_radius(block, rng);
  s.x.resize(block.n);
  for (std::size_t i = 0; i < block.n; ++i) s.x[i] = block.scale * s.r * s.v[i];
  return s;
}

namespace detail {
template <class BlockFn>
void fill_blocks(const ProductMeasure& m, std::span<double> out, const std::vector<char>* active,
                 BlockFn&& fn) {
  if (out.size() != m.dim()) throw ConfigError("sampler: output size != d");
  std::vector<double> buf;
  for (std::size_t k = 0; k < m.block_count(); ++k) {
    const auto& j = m.index_set(k);
    if (active && !(*active)[k]) {
      for (std::size_t i : j) out[i] = 0.0;
      continue;
    }
    const auto& block = m.block(k);
    buf.resize(block.n);
    fn(block, std::span<double>(buf));
    for (std::size_t s = 0; s < j.size(); ++s) out[j[s]] = buf[s];
  }
}
}  // namespace detail

/// Full vector X. When `active` is given only blocks with active[k] != 0 are
/// drawn and the rest are zero-filled; this is how sparse index sets avoid
/// paying for blocks they never read.
inline void sample_X(const ProductMeasure& m, RngStream& rng, std::span<double> out,
                     const std::vector<char>* active = nullptr) {
  detail::fill_blocks(m, out, active, [&](const BlockSpec& b, std::span<double> x) {
    sample_cone(b, rng, x);
    const double r = b.scale * sample_radius(b, rng);
    for (auto& v : x) v *= r;
  });
}

inline std::vector<double> sample_X(const ProductMeasure& m, RngStream& rng) {
  std::vector<double> x(m.dim());
  sample_X(m, rng, x);
  return x;
}

/// Y: independent coordinates with density proportional to exp(-b_k |x|^{p_k}).
inline void sample_Y(const ProductMeasure& m, RngStream& rng, std::span<double> out,
                     const std::vector<char>* active = nullptr) {
  detail::fill_blocks(m, out, active, [&](const BlockSpec& b, std::span<double> y) {
    for (auto& v : y) v = sample_generalized_gaussian(b.p, b.b, rng);
  });
}

inline std::vector<double> sample_Y(const ProductMeasure& m, RngStream& rng) {
  std::vector<double> y(m.dim());
  sample_Y(m, rng, y);
  return y;
}

/// Independent symmetric standard exponential coordinates, density e^{-|x|}/2.
inline void sample_exponential_vector(RngStream& rng, std::span<double> out) {
  for (auto& v : out) {
    v = rng.sign() * -std::log1p(-rng.uniform());
  }
}

inline std::vector<double> sample_exponential_vector(std::size_t d, RngStream& rng) {
  if (d < 1) throw ConfigError("sample_exponential_vector: d must be >= 1");
  std::vector<double> e(d);
  sample_exponential_vector(rng, e);
  return e;
}

inline std::vector<double> sample_rademacher_vector(std::size_t d, RngStream& rng) {
  std::vector<double> e(d);
  for (auto& v : e) v = rng.sign();
  return e;
}

/// Which random vector a Monte Carlo estimator draws.
enum class ProcessKind { X, Y, exponential, rademacher };

inline ProcessKind process_kind_from_string(const std::string& s) {
  if (s == "X" || s == "x") return ProcessKind::X;
  if (s == "Y" || s == "y") return ProcessKind::Y;
  if (s == "exponential" || s == "E") return ProcessKind::exponential;
  if (s == "rademacher") return ProcessKind::rademacher;
  throw ConfigError("unknown process kind '" + s + "'");
}

/// Draws vectors of one process kind for a fixed measure.
class ProcessSampler {
 public:
  ProcessSampler(const ProductMeasure& m, ProcessKind kind) : m_(&m), kind_(kind) {}

  std::size_t dim() const { return m_->dim(); }
  const ProductMeasure& measure() const { return *m_; }
  ProcessKind kind() const { return kind_; }

  /// Restrict draws to the blocks touching `coords`.
  void restrict_to(const std::vector<std::size_t>& coords) {
    active_.assign(m_->block_count(), 0);
    for (std::size_t i : coords) active_[m_->block_of(i)] = 1;
    restricted_ = true;
  }

  void operator()(RngStream& rng, std::span<double> out) const {
    const std::vector<char>* act = restricted_ ? &active_ : nullptr;
    switch (kind_) {
      case ProcessKind::X:
        sample_X(*m_, rng, out, act);
        break;
      case ProcessKind::Y:
        sample_Y(*m_, rng, out, act);
        break;
      case ProcessKind::exponential:
        sample_exponential_vector(rng, out);
        break;
      case ProcessKind::rademacher:
        for (auto& v : out) v = rng.sign();
        break;
    }
  }

 private:
  const ProductMeasure* m_;
  ProcessKind kind_;
  std::vector<char> active_;
  bool restricted_ = false;
};

}  // namespace sudakov

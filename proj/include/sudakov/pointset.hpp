#pragma once

// Finite index sets T and Monte Carlo functionals of the canonical process
// over them: E sup_{t in T} X_t and pairwise L_p distances on one sample batch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sudakov/errors.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/moments.hpp"
#include "sudakov/parallel.hpp"
#include "sudakov/rng.hpp"
#include "sudakov/sampling.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

/// Sparse view of one point: nonzero coordinates and their values.
struct SparsePoint {
  std::vector<std::size_t> idx;
  std::vector<double> val;

  double dot(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) s += val[a] * x[idx[a]];
    return s;
  }
};

/// Finite T in R^d attached to a measure.
class PointSet {
 public:
  PointSet() = default;
  PointSet(const ProductMeasure& m, std::vector<std::vector<double>> points, double p = 0.0)
      : measure_(&m), points_(std::move(points)), p_(p) {
    for (std::size_t a = 0; a < points_.size(); ++a) {
      if (points_[a].size() != m.dim()) {
        throw ConfigError("PointSet: point " + std::to_string(a) + " has dimension " +
                          std::to_string(points_[a].size()) + ", expected " +
                          std::to_string(m.dim()));
      }
    }
    rebuild();
  }

  const ProductMeasure& measure() const { return *measure_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<double>& operator[](std::size_t a) const { return points_.at(a); }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const SparsePoint& sparse(std::size_t a) const { return sparse_.at(a); }
  double p() const { return p_; }

  BlockVector vector(std::size_t a) const { return BlockVector(*measure_, points_.at(a)); }
  BlockVector difference(std::size_t a, std::size_t b) const {
    std::vector<double> c = points_.at(a);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= points_.at(b)[i];
    return BlockVector(*measure_, std::move(c));
  }

  /// Coordinates used by at least one point.
  const std::vector<std::size_t>& touched() const { return touched_; }

  PointSet subset(const std::vector<std::size_t>& which) const {
    std::vector<std::vector<double>> pts;
    for (std::size_t a : which) pts.push_back(points_.at(a));
    return PointSet(*measure_, std::move(pts), p_);
  }

  PointSet scaled(double lambda) const {
    auto pts = points_;
    for (auto& pt : pts) for (auto& x : pt) x *= lambda;
    return PointSet(*measure_, std::move(pts), p_);
  }

 private:
  void rebuild() {
    sparse_.clear();
    std::vector<char> used(measure_->dim(), 0);
    for (const auto& pt : points_) {
      SparsePoint sp;
      for (std::size_t i = 0; i < pt.size(); ++i) {
        if (pt[i] != 0.0) {
          sp.idx.push_back(i);
          sp.val.push_back(pt[i]);
          used[i] = 1;
        }
      }
      sparse_.push_back(std::move(sp));
    }
    touched_.clear();
    for (std::size_t i = 0; i < used.size(); ++i) if (used[i]) touched_.push_back(i);
  }

  const ProductMeasure* measure_ = nullptr;
  std::vector<std::vector<double>> points_;
  std::vector<SparsePoint> sparse_;
  std::vector<std::size_t> touched_;
  double p_ = 0.0;
};

/// sup_{t in T} <X_s, t> for every sample s. Only blocks meeting `universe`
/// (default: the coordinates T touches) are drawn, so two sets evaluated with
/// the same universe and stream see the same X.
inline std::vector<double> sup_samples(const PointSet& T, std::size_t n, const RngStream& rng,
                                       ProcessKind kind = ProcessKind::X,
                                       const std::vector<std::size_t>* universe = nullptr) {
  if (T.empty()) throw ConfigError("sup_samples: T is empty");
  ProcessSampler sampler(T.measure(), kind);
  sampler.restrict_to(universe ? *universe : T.touched());
  std::vector<double> out(n);
  parallel_for(chunk_count(n), [&](std::size_t c) {
    RngStream r = rng.derive(c);
    std::vector<double> x(T.measure().dim());
    const std::size_t end = std::min(n, (c + 1) * kChunkSize);
    for (std::size_t s = c * kChunkSize; s < end; ++s) {
      sampler(r, x);
      double best = -kInf;
      for (std::size_t a = 0; a < T.size(); ++a) best = std::max(best, T.sparse(a).dot(x));
      out[s] = best;
    }
  });
  return out;
}

/// Mean and standard error of a sample vector, summed in a fixed order.
inline Estimate mean_estimate(std::span<const double> v, std::uint64_t seed) {
  Estimate e;
  e.n_samples = v.size();
  e.seed = seed;
  if (v.empty()) return e;
  CompensatedSum s1, s2;
  for (double x : v) s1.add(x);
  const double n = static_cast<double>(v.size());
  const double mean = s1.value() / n;
  for (double x : v) s2.add((x - mean) * (x - mean));
  e.value = mean;
  e.stderr_ = v.size() > 1 ? std::sqrt(s2.value() / (n - 1.0) / n) : 0.0;
  return e;
}

/// Monte Carlo E sup_{t in T} X_t.
inline Estimate esup_mc(const PointSet& T, std::size_t n, const RngStream& rng,
                        ProcessKind kind = ProcessKind::X,
                        const std::vector<std::size_t>* universe = nullptr) {
  const auto v = sup_samples(T, n, rng, kind, universe);
  return mean_estimate(v, rng.seed());
}

/// n x |T| matrix of projections <X_s, t_a>, used for all pairwise moments.
struct ProjectionBatch {
  std::size_t n = 0;
  std::size_t points = 0;
  std::vector<double> z;  // row-major, sample s at z[s * points + a]

  double operator()(std::size_t s, std::size_t a) const { return z[s * points + a]; }
};

inline ProjectionBatch project_samples(const PointSet& T, std::size_t n, const RngStream& rng,
                                       ProcessKind kind = ProcessKind::X) {
  ProjectionBatch b;
  b.n = n;
  b.points = T.size();
  b.z.assign(n * T.size(), 0.0);
  if (T.empty()) return b;
  ProcessSampler sampler(T.measure(), kind);
  sampler.restrict_to(T.touched());
  parallel_for(chunk_count(n), [&](std::size_t c) {
    RngStream r = rng.derive(c);
    std::vector<double> x(T.measure().dim());
    const std::size_t end = std::min(n, (c + 1) * kChunkSize);
    for (std::size_t s = c * kChunkSize; s < end; ++s) {
      sampler(r, x);
      for (std::size_t a = 0; a < T.size(); ++a) b.z[s * b.points + a] = T.sparse(a).dot(x);
    }
  });
  return b;
}

/// ||X_{t_a} - X_{t_b}||_p estimated from a projection batch.
inline Estimate pair_moment(const ProjectionBatch& b, std::size_t i, std::size_t j, double p) {
  std::vector<double> diff(b.n);
  for (std::size_t s = 0; s < b.n; ++s) diff[s] = b(s, i) - b(s, j);
  return lp_norm_estimate(diff, p, 0);
}

}  // namespace sudakov

// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gpx/error.hpp"

namespace gpx {

std::string to_string(const Site& s) {
  std::ostringstream os;
  os.precision(17);
  if (const double* t = std::get_if<double>(&s)) {
    os << *t;
  } else {
    const auto& v = std::get<Vec3>(s);
    os << '(' << v[0] << ' ' << v[1] << ' ' << v[2] << ')';
  }
  return os.str();
}

std::vector<Site> make_sites(const std::vector<double>& grid) {
  return {grid.begin(), grid.end()};
}

KernelSpec KernelSpec::fbm(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw ParameterError("fbm kernel: alpha must lie in (0, 2], got " + std::to_string(alpha));
  return KernelSpec(FbmIncrement{alpha});
}

KernelSpec KernelSpec::sphere(double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw ParameterError("sphere kernel: beta must lie in (0, 1), got " + std::to_string(beta));
  return KernelSpec(SphereGeodesic{beta});
}

KernelSpec KernelSpec::custom(std::vector<double> sites, Eigen::MatrixXd gamma) {
  const auto k = static_cast<Eigen::Index>(sites.size());
  if (gamma.rows() != k || gamma.cols() != k)
    throw StructureError("custom kernel: matrix must be square and match the site list");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (gamma(i, i) != 0.0) throw StructureError("custom kernel: nonzero diagonal");
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = gamma(i, j);
      if (std::isnan(v) || v < 0.0) throw StructureError("custom kernel: negative or NaN entry");
      if (v != gamma(j, i)) throw StructureError("custom kernel: matrix is not symmetric");
    }
  }
  return KernelSpec(CustomMatrix{std::move(sites), std::move(gamma)});
}

KernelSpec KernelSpec::scaled(KernelSpec base, double factor) {
  if (!(factor >= 0.0) || std::isinf(factor))
    throw ParameterError("scaled kernel: factor must be finite and >= 0");
  return KernelSpec(Scaled{std::make_shared<const KernelSpec>(std::move(base)), factor});
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FbmIncrement>) {
          os << "fbm(alpha=" << k.alpha << ")";
        } else if constexpr (std::is_same_v<T, SphereGeodesic>) {
          os << "sphere(beta=" << k.beta << ")";
        } else if constexpr (std::is_same_v<T, CustomMatrix>) {
          os << "custom(" << k.sites.size() << " sites)";
        } else {
          os << k.factor << "*" << k.base->describe();
        }
      },
      v_);
  return os.str();
}

namespace {

double real_site(const Site& s, const char* kernel) {
  if (const double* t = std::get_if<double>(&s)) return *t;
  throw DomainError(std::string(kernel) + " kernel expects real sites");
}

const Vec3& sphere_site(const Site& s) {
  const Vec3* v = std::get_if<Vec3>(&s);
  if (v == nullptr) throw DomainError("sphere kernel expects unit 3-vectors");
  const double norm2 = (*v)[0] * (*v)[0] + (*v)[1] * (*v)[1] + (*v)[2] * (*v)[2];
  if (std::fabs(norm2 - 1.0) > 1e-9) throw DomainError("sphere kernel: site is not a unit vector");
  return *v;
}

}  // namespace

double eval_gamma(const KernelSpec& spec, const Site& t1, const Site& t2) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, KernelSpec::FbmIncrement>) {
          const double a = real_site(t1, "fbm");
          const double b = real_site(t2, "fbm");
          if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("fbm kernel: non-finite site");
          return a == b ? 0.0 : std::pow(std::fabs(a - b), k.alpha);
        } else if constexpr (std::is_same_v<T, KernelSpec::SphereGeodesic>) {
          const Vec3& a = sphere_site(t1);
          const Vec3& b = sphere_site(t2);
          if (a == b) return 0.0;
          const double dot = std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
          return std::pow(std::acos(dot), k.beta);
        } else if constexpr (std::is_same_v<T, KernelSpec::CustomMatrix>) {
          auto index = [&](const Site& s) {
            const double t = real_site(s, "custom");
            const auto it = std::find(k.sites.begin(), k.sites.end(), t);
            if (it == k.sites.end()) throw DomainError("custom kernel: site " + to_string(s) + " is not a grid member");
            return static_cast<Eigen::Index>(it - k.sites.begin());
          };
          return k.gamma(index(t1), index(t2));
        } else {
          // Scaling keeps independence blocks: factor * inf = inf for every factor.
          const double base = eval_gamma(*k.base, t1, t2);
          return is_inf(base) ? kInf : k.factor * base;
        }
      },
      spec.variant());
}

GammaMatrix::GammaMatrix(std::vector<Site> sites, Eigen::MatrixXd values)
    : sites_(std::move(sites)), values_(std::move(values)) {
  const auto k = static_cast<Eigen::Index>(sites_.size());
  if (k == 0) throw StructureError("gamma matrix: empty site list");
  if (values_.rows() != k || values_.cols() != k)
    throw StructureError("gamma matrix: shape does not match site list");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (values_(i, i) != 0.0) throw StructureError("gamma matrix: nonzero diagonal");
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double a = values_(i, j);
      if (std::isnan(a) || a < 0.0) throw StructureError("gamma matrix: negative or NaN entry");
      if (a != values_(j, i)) throw StructureError("gamma matrix: not symmetric");
    }
  }
  // Finiteness must be transitive; decompose_extended throws otherwise.
  (void)decompose_extended(*this);
}

bool GammaMatrix::all_finite() const { return values_.allFinite(); }

double GammaMatrix::max_norm() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double v = values_.data()[i];
    if (!is_inf(v)) m = std::max(m, v);
  }
  return m;
}

GammaMatrix GammaMatrix::restrict(const std::vector<std::size_t>& indices) const {
  const auto k = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd sub(k, k);
  std::vector<Site> sites;
  sites.reserve(indices.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (indices[i] >= size()) throw ParameterError("gamma matrix: index out of range");
    sites.push_back(sites_[indices[i]]);
    for (Eigen::Index j = 0; j < k; ++j)
      sub(i, j) = values_(static_cast<Eigen::Index>(indices[i]), static_cast<Eigen::Index>(indices[j]));
  }
  return GammaMatrix(std::move(sites), std::move(sub));
}

GammaMatrix gamma_matrix(const KernelSpec& spec, const std::vector<Site>& grid) {
  const auto k = static_cast<Eigen::Index>(grid.size());
  if (k == 0) throw ParameterError("gamma_matrix: empty grid");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) m(i, j) = m(j, i) = eval_gamma(spec, grid[i], grid[j]);
  for (Eigen::Index i = 0; i < k; ++i) m(i, i) = eval_gamma(spec, grid[i], grid[i]);
  return GammaMatrix(grid, std::move(m));
}

BlockPartition decompose_extended(const GammaMatrix& g) {
  const std::size_t k = g.size();
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (!is_inf(g(i, j))) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  BlockPartition out;
  out.block_of.assign(k, 0);
  std::vector<std::ptrdiff_t> block_of_root(k, -1);
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = find(i);
    if (block_of_root[r] < 0) {
      block_of_root[r] = static_cast<std::ptrdiff_t>(out.blocks.size());
      out.blocks.emplace_back();
    }
    out.block_of[i] = static_cast<std::size_t>(block_of_root[r]);
    out.blocks[out.block_of[i]].push_back(i);
  }
  for (const auto& block : out.blocks)
    for (std::size_t a = 0; a < block.size(); ++a)
      for (std::size_t b = a + 1; b < block.size(); ++b)
        if (is_inf(g(block[a], block[b])))
          throw StructureError("finiteness is not transitive: Gamma(" + std::to_string(block[a]) + "," +
                               std::to_string(block[b]) + ") = inf although both are linked by finite entries");
  return out;
}

namespace {

BlockCheck check_block(const GammaMatrix& g, const std::vector<std::size_t>& idx, double tol) {
  BlockCheck out;
  out.indices = idx;
  out.tol = tol;
  const auto k = static_cast<Eigen::Index>(idx.size());
  if (k < 2) return out;
  Eigen::MatrixXd block(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) block(i, j) = g(idx[i], idx[j]);
  const Eigen::MatrixXd proj =
      Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(k));
  const Eigen::MatrixXd form = proj * block * proj;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (form + form.transpose()), Eigen::EigenvaluesOnly);
  out.max_eigenvalue = es.eigenvalues().maxCoeff();
  out.pass = out.max_eigenvalue <= tol;
  return out;
}

NegDefReport validate_impl(const GammaMatrix& g, double abs_tol, double rel_tol) {
  NegDefReport report;
  report.worst = -kInf;
  for (const auto& block : decompose_extended(g).blocks) {
    double tol = abs_tol;
    if (rel_tol > 0.0) tol = rel_tol * g.restrict(block).max_norm();
    auto bc = check_block(g, block, tol);
    report.pass = report.pass && bc.pass;
    report.worst = std::max(report.worst, bc.max_eigenvalue);
    report.blocks.push_back(std::move(bc));
  }
  return report;
}

}  // namespace

NegDefReport validate_negative_definite(const GammaMatrix& g, double tol) {
  if (!(tol >= 0.0)) throw ParameterError("validate_negative_definite: tol must be >= 0");
  return validate_impl(g, tol, 0.0);
}

NegDefReport validate_negative_definite(const GammaMatrix& g) { return validate_impl(g, 0.0, 1e-8); }

CovMatrix ws_covariance(const GammaMatrix& g, std::size_t s, const std::vector<std::size_t>& indices) {
  if (s >= g.size()) throw ParameterError("ws_covariance: anchor out of range");
  std::vector<std::size_t> idx = indices;
  if (idx.empty()) {
    idx.resize(g.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  for (auto i : idx) {
    if (i >= g.size()) throw ParameterError("ws_covariance: index out of range");
    if (is_inf(g(i, s)))
      throw BlockError("ws_covariance: site " + std::to_string(i) + " is not in the block of anchor " +
                       std::to_string(s));
  }
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd c(k, k);
  std::vector<Site> sites;
  for (Eigen::Index i = 0; i < k; ++i) {
    sites.push_back(g.sites()[idx[i]]);
    for (Eigen::Index j = 0; j < k; ++j) c(i, j) = 0.5 * (g(idx[i], s) + g(idx[j], s) - g(idx[i], idx[j]));
  }
  return CovMatrix(std::move(sites), std::move(c));
}

namespace {

CovMatrix exp_cov(const GammaMatrix& g, double scale) {
  const auto k = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd c(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = g(i, j);
      c(i, j) = is_inf(v) ? 0.0 : std::exp(-v * scale);
    }
  return CovMatrix(g.sites(), std::move(c));
}

}  // namespace

CovMatrix schoenberg_cov(const GammaMatrix& g, double n) {
  if (!(n >= 2.0)) throw ParameterError("schoenberg_cov: n must be >= 2");
  return exp_cov(g, 1.0 / (4.0 * std::log(n)));
}

CovMatrix schoenberg_cov_min(const GammaMatrix& g, double n) {
  if (!(n >= 2.0)) throw ParameterError("schoenberg_cov_min: n must be >= 2");
  return exp_cov(g, M_PI / (n * n));
}

}  // namespace gpx

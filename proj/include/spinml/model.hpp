#pragma once

// Spin-1/2 Hamiltonians as sums of products of single-site operators.
//
// Sites are 0-based in the C++ API. Documents written for users (model and
// tree files, CSV output) use 1-based site labels.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinml/types.hpp"

namespace spinml {

using Matrix2 = Eigen::Matrix2cd;

/// One factor of a product term. Plus/Minus follow the unnormalized
/// convention sigma^+- = sigma^x +- i sigma^y, so Plus = [[0,2],[0,0]].
struct SiteOperator {
  enum class Kind { Id, X, Y, Z, Plus, Minus, Dense };

  Kind kind = Kind::Id;
  std::optional<Matrix2> dense;

  static SiteOperator id() { return {Kind::Id, std::nullopt}; }
  static SiteOperator x() { return {Kind::X, std::nullopt}; }
  static SiteOperator y() { return {Kind::Y, std::nullopt}; }
  static SiteOperator z() { return {Kind::Z, std::nullopt}; }
  static SiteOperator plus() { return {Kind::Plus, std::nullopt}; }
  static SiteOperator minus() { return {Kind::Minus, std::nullopt}; }
  static SiteOperator matrix(const Matrix2& m) { return {Kind::Dense, m}; }

  Matrix2 to_matrix() const;
  bool is_identity() const;
  bool is_pauli() const { return kind == Kind::X || kind == Kind::Y || kind == Kind::Z; }
  std::string label() const;

  friend bool operator==(const SiteOperator& a, const SiteOperator& b);
};

struct ProductTerm {
  double coefficient = 0.0;
  std::map<int, SiteOperator> factors;  // site -> operator; absent sites are Id

  ProductTerm() = default;
  ProductTerm(double c, std::map<int, SiteOperator> f);
};

/// Parameters a model was built from. Unused fields stay at their defaults.
struct ModelInfo {
  std::string name = "custom";
  int num_sites = 0;
  int nx = 0;
  int ny = 0;
  double J = 0.0;
  double h_x = 0.0;
  double h_z = 0.0;
  double alpha = 0.0;
  double J0 = 0.0;
  std::optional<std::uint64_t> seed;
};

class SumOfProducts {
 public:
  SumOfProducts() = default;
  SumOfProducts(int num_sites, std::vector<ProductTerm> terms, ModelInfo info = {});

  int num_sites() const { return num_sites_; }
  const std::vector<ProductTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  const ModelInfo& info() const { return info_; }

  /// Sum of |c_r| times the product of factor norms; an upper bound on ||H||.
  double norm_estimate() const;

 private:
  int num_sites_ = 0;
  std::vector<ProductTerm> terms_;
  ModelInfo info_;
};

struct DisorderSpec {
  enum class Distribution { UniformSymmetric };
  std::uint64_t seed = 0;
  Distribution distribution = Distribution::UniformSymmetric;
};

/// Uniform draws on [-1, 1) from mt19937_64 with 53-bit mantissa scaling.
std::vector<double> draw_couplings(const DisorderSpec& disorder, std::size_t count);

SumOfProducts build_sr_tfim(int L, double J, double h_x, double h_z);
SumOfProducts build_lr_tfim(int L, double J, double h_x, double h_z, double alpha);
SumOfProducts build_xysg(int L, double alpha, const DisorderSpec& disorder);
SumOfProducts build_sdrg(int L, double J0);

/// Nearest-neighbour TFIM on an open nx-by-ny square lattice, row-major sites.
SumOfProducts build_sr_tfim_2d(int nx, int ny, double J, double h_x, double h_z);

/// Single-term operators used by observables.
ProductTerm single_site_term(int site, SiteOperator op, double coefficient = 1.0);
ProductTerm two_site_term(int i, SiteOperator oi, int j, SiteOperator oj, double coefficient = 1.0);

// .model.json documents
nlohmann::json model_to_json(const SumOfProducts& H);
SumOfProducts model_from_json(const nlohmann::json& doc);
SumOfProducts build_model(const ModelInfo& info);

}  // namespace spinml

#include "spinml/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace spinml {

namespace {

const cplx I1{0.0, 1.0};

bool sites_in_range(const std::map<int, SiteOperator>& f, int L) {
  return std::all_of(f.begin(), f.end(), [L](const auto& kv) { return kv.first >= 0 && kv.first < L; });
}

std::string kind_name(SiteOperator::Kind k) {
  switch (k) {
    case SiteOperator::Kind::Id: return "I";
    case SiteOperator::Kind::X: return "X";
    case SiteOperator::Kind::Y: return "Y";
    case SiteOperator::Kind::Z: return "Z";
    case SiteOperator::Kind::Plus: return "+";
    case SiteOperator::Kind::Minus: return "-";
    case SiteOperator::Kind::Dense: return "M";
  }
  return "?";
}

}  // namespace

Matrix2 SiteOperator::to_matrix() const {
  Matrix2 m;
  switch (kind) {
    case Kind::Id: m << 1, 0, 0, 1; break;
    case Kind::X: m << 0, 1, 1, 0; break;
    case Kind::Y: m << 0, -I1, I1, 0; break;
    case Kind::Z: m << 1, 0, 0, -1; break;
    case Kind::Plus: m << 0, 2, 0, 0; break;
    case Kind::Minus: m << 0, 0, 2, 0; break;
    case Kind::Dense: m = *dense; break;
  }
  return m;
}

bool SiteOperator::is_identity() const {
  if (kind == Kind::Id) return true;
  if (kind == Kind::Dense) return dense->isApprox(Matrix2::Identity(), 0.0);
  return false;
}

std::string SiteOperator::label() const { return kind_name(kind); }

bool operator==(const SiteOperator& a, const SiteOperator& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == SiteOperator::Kind::Dense) return *a.dense == *b.dense;
  return true;
}

ProductTerm::ProductTerm(double c, std::map<int, SiteOperator> f) : coefficient(c) {
  for (auto& [site, op] : f)
    if (!op.is_identity()) factors.emplace(site, std::move(op));
}

SumOfProducts::SumOfProducts(int num_sites, std::vector<ProductTerm> terms, ModelInfo info)
    : num_sites_(num_sites), info_(std::move(info)) {
  if (num_sites < 1) throw InvalidModel("model needs at least one site");
  info_.num_sites = num_sites;
  // Merge terms with equal factor maps, keeping first-appearance order.
  for (auto& t : terms) {
    if (!sites_in_range(t.factors, num_sites))
      throw InvalidModel("term references a site outside [1, " + std::to_string(num_sites) + "]");
    auto it = std::find_if(terms_.begin(), terms_.end(),
                           [&](const ProductTerm& u) { return u.factors == t.factors; });
    if (it != terms_.end())
      it->coefficient += t.coefficient;
    else
      terms_.push_back(std::move(t));
  }
  std::erase_if(terms_, [](const ProductTerm& t) { return t.coefficient == 0.0; });
}

double SumOfProducts::norm_estimate() const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double p = std::abs(t.coefficient);
    for (const auto& [site, op] : t.factors) p *= op.to_matrix().operatorNorm();
    s += p;
  }
  return s;
}

std::vector<double> draw_couplings(const DisorderSpec& disorder, std::size_t count) {
  std::mt19937_64 gen(disorder.seed);
  std::vector<double> out(count);
  for (auto& v : out) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    v = 2.0 * u - 1.0;
  }
  return out;
}

ProductTerm single_site_term(int site, SiteOperator op, double coefficient) {
  return ProductTerm(coefficient, {{site, std::move(op)}});
}

ProductTerm two_site_term(int i, SiteOperator oi, int j, SiteOperator oj, double coefficient) {
  if (i == j) throw DomainError("two_site_term needs distinct sites");
  return ProductTerm(coefficient, {{i, std::move(oi)}, {j, std::move(oj)}});
}

namespace {

void append_fields(std::vector<ProductTerm>& terms, int L, double h_x, double h_z) {
  for (int i = 0; i < L; ++i) terms.push_back(single_site_term(i, SiteOperator::x(), -h_x));
  for (int i = 0; i < L; ++i) terms.push_back(single_site_term(i, SiteOperator::z(), -h_z));
}

void require_sites(int L) {
  if (L < 2) throw InvalidModel("model needs L >= 2, got " + std::to_string(L));
}

}  // namespace

SumOfProducts build_sr_tfim(int L, double J, double h_x, double h_z) {
  require_sites(L);
  std::vector<ProductTerm> terms;
  for (int i = 0; i + 1 < L; ++i)
    terms.push_back(two_site_term(i, SiteOperator::z(), i + 1, SiteOperator::z(), -J));
  append_fields(terms, L, h_x, h_z);
  ModelInfo info;
  info.name = "sr_tfim";
  info.J = J;
  info.h_x = h_x;
  info.h_z = h_z;
  return SumOfProducts(L, std::move(terms), info);
}

SumOfProducts build_lr_tfim(int L, double J, double h_x, double h_z, double alpha) {
  require_sites(L);
  if (!(alpha > 0.0)) throw InvalidModel("LR-TFIM needs alpha > 0");
  std::vector<ProductTerm> terms;
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j)
      terms.push_back(two_site_term(i, SiteOperator::z(), j, SiteOperator::z(),
                                    -J * std::pow(static_cast<double>(j - i), -alpha)));
  append_fields(terms, L, h_x, h_z);
  ModelInfo info;
  info.name = "lr_tfim";
  info.J = J;
  info.h_x = h_x;
  info.h_z = h_z;
  info.alpha = alpha;
  return SumOfProducts(L, std::move(terms), info);
}

SumOfProducts build_xysg(int L, double alpha, const DisorderSpec& disorder) {
  require_sites(L);
  const auto pairs = static_cast<std::size_t>(L) * static_cast<std::size_t>(L - 1) / 2;
  const auto couplings = draw_couplings(disorder, pairs);
  std::vector<ProductTerm> terms;
  std::size_t k = 0;
  for (int i = 0; i < L; ++i) {
    for (int j = i + 1; j < L; ++j, ++k) {
      // J (s+_i s-_j + s+_j s-_i) = 2J (X_i X_j + Y_i Y_j) with unnormalized s+-
      const double c = 2.0 * couplings[k] * std::pow(static_cast<double>(j - i), -alpha);
      terms.push_back(two_site_term(i, SiteOperator::x(), j, SiteOperator::x(), c));
      terms.push_back(two_site_term(i, SiteOperator::y(), j, SiteOperator::y(), c));
    }
  }
  ModelInfo info;
  info.name = "xysg";
  info.alpha = alpha;
  info.seed = disorder.seed;
  return SumOfProducts(L, std::move(terms), info);
}

SumOfProducts build_sdrg(int L, double J0) {
  require_sites(L);
  if (L % 2 != 0) throw InvalidModel("SDRG chain needs an even number of sites (center at L/2)");
  std::vector<ProductTerm> terms;
  for (int bond = 1; bond < L; ++bond) {  // 1-based bond i couples sites i, i+1
    const double n = std::abs(L / 2.0 - bond);
    const double Ji = J0 * std::exp(-2.0 * n * n);
    const int i = bond - 1;
    terms.push_back(two_site_term(i, SiteOperator::x(), i + 1, SiteOperator::x(), 0.5 * Ji));
    terms.push_back(two_site_term(i, SiteOperator::y(), i + 1, SiteOperator::y(), 0.5 * Ji));
  }
  ModelInfo info;
  info.name = "sdrg";
  info.J0 = J0;
  return SumOfProducts(L, std::move(terms), info);
}

SumOfProducts build_sr_tfim_2d(int nx, int ny, double J, double h_x, double h_z) {
  if (nx < 1 || ny < 1 || nx * ny < 2) throw InvalidModel("2D lattice needs at least two sites");
  const int L = nx * ny;
  std::vector<ProductTerm> terms;
  for (int s = 0; s < L; ++s) {
    const int x = s % nx;
    const int y = s / nx;
    if (x + 1 < nx) terms.push_back(two_site_term(s, SiteOperator::z(), s + 1, SiteOperator::z(), -J));
    if (y + 1 < ny) terms.push_back(two_site_term(s, SiteOperator::z(), s + nx, SiteOperator::z(), -J));
  }
  append_fields(terms, L, h_x, h_z);
  ModelInfo info;
  info.name = "sr_tfim_2d";
  info.nx = nx;
  info.ny = ny;
  info.J = J;
  info.h_x = h_x;
  info.h_z = h_z;
  return SumOfProducts(L, std::move(terms), info);
}

SumOfProducts build_model(const ModelInfo& info) {
  const auto& n = info.name;
  if (n == "sr_tfim") return build_sr_tfim(info.num_sites, info.J, info.h_x, info.h_z);
  if (n == "lr_tfim") return build_lr_tfim(info.num_sites, info.J, info.h_x, info.h_z, info.alpha);
  if (n == "xysg") {
    if (!info.seed) throw InvalidModel("xysg model needs a seed");
    return build_xysg(info.num_sites, info.alpha, DisorderSpec{*info.seed});
  }
  if (n == "sdrg") return build_sdrg(info.num_sites, info.J0);
  if (n == "sr_tfim_2d") return build_sr_tfim_2d(info.nx, info.ny, info.J, info.h_x, info.h_z);
  throw InvalidModel("unknown model '" + n + "'");
}

// ---------------------------------------------------------------- documents

namespace {

using nlohmann::json;

json factor_to_json(const SiteOperator& op) {
  if (op.kind != SiteOperator::Kind::Dense) return op.label();
  json re = json::array(), im = json::array();
  for (int r = 0; r < 2; ++r) {
    re.push_back({op.dense->coeff(r, 0).real(), op.dense->coeff(r, 1).real()});
    im.push_back({op.dense->coeff(r, 0).imag(), op.dense->coeff(r, 1).imag()});
  }
  return json{{"re", re}, {"im", im}};
}

SiteOperator factor_from_json(const json& j, const std::string& where) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "I") return SiteOperator::id();
    if (s == "X") return SiteOperator::x();
    if (s == "Y") return SiteOperator::y();
    if (s == "Z") return SiteOperator::z();
    if (s == "+") return SiteOperator::plus();
    if (s == "-") return SiteOperator::minus();
    throw ParseError(where + ": unknown site operator '" + s + "'");
  }
  if (!j.is_object() || !j.contains("re") || !j.contains("im"))
    throw ParseError(where + ": dense factor needs 're' and 'im'");
  Matrix2 m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = cplx(j["re"][r][c].get<double>(), j["im"][r][c].get<double>());
  return SiteOperator::matrix(m);
}

const std::set<std::string> kModelKeys = {"model", "L", "nx", "ny", "J", "h_x", "h_z",
                                          "alpha", "J0", "seed", "terms"};

}  // namespace

nlohmann::json model_to_json(const SumOfProducts& H) {
  const auto& info = H.info();
  json doc;
  doc["model"] = info.name;
  if (info.name == "sr_tfim_2d") {
    doc["nx"] = info.nx;
    doc["ny"] = info.ny;
  } else {
    doc["L"] = H.num_sites();
  }
  doc["J"] = info.J;
  doc["h_x"] = info.h_x;
  doc["h_z"] = info.h_z;
  doc["alpha"] = info.alpha;
  doc["J0"] = info.J0;
  doc["seed"] = info.seed ? json(*info.seed) : json(nullptr);
  json terms = json::array();
  for (const auto& t : H.terms()) {
    json f = json::object();
    for (const auto& [site, op] : t.factors) f[std::to_string(site + 1)] = factor_to_json(op);
    terms.push_back({{"coefficient", t.coefficient}, {"factors", f}});
  }
  doc["terms"] = terms;
  return doc;
}

SumOfProducts model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("model document must be an object");
  for (const auto& [key, _] : doc.items())
    if (!kModelKeys.count(key)) throw ParseError("model document: unknown field '" + key + "'");
  if (!doc.contains("model")) throw ParseError("model document: missing field 'model'");
  try {
    ModelInfo info;
    info.name = doc.at("model").get<std::string>();
    auto num = [&](const char* k, double def) { return doc.contains(k) ? doc[k].get<double>() : def; };
    info.num_sites = doc.contains("L") ? doc["L"].get<int>() : 0;
    info.nx = doc.contains("nx") ? doc["nx"].get<int>() : 0;
    info.ny = doc.contains("ny") ? doc["ny"].get<int>() : 0;
    info.J = num("J", 1.0);
    info.h_x = num("h_x", 0.0);
    info.h_z = num("h_z", 0.0);
    info.alpha = num("alpha", 3.0);
    info.J0 = num("J0", 1.0);
    if (doc.contains("seed") && !doc["seed"].is_null()) info.seed = doc["seed"].get<std::uint64_t>();
    if (info.name != "custom") return build_model(info);

    if (!doc.contains("terms")) throw ParseError("custom model needs 'terms'");
    if (info.num_sites < 1) throw ParseError("custom model needs 'L'");
    std::vector<ProductTerm> terms;
    std::size_t k = 0;
    for (const auto& t : doc["terms"]) {
      const std::string where = "/terms/" + std::to_string(k++);
      std::map<int, SiteOperator> f;
      for (const auto& [site, op] : t.at("factors").items())
        f.emplace(std::stoi(site) - 1, factor_from_json(op, where + "/factors/" + site));
      terms.emplace_back(t.at("coefficient").get<double>(), std::move(f));
    }
    return SumOfProducts(info.num_sites, std::move(terms), info);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
}

}  // namespace spinml

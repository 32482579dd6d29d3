#include "nilpotentizer/liealg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <tuple>
#include <type_traits>

#include "free_assoc.hpp"

namespace nilpotentizer {

struct BchProgram {
  // kind 0: first argument, 1: second argument, 2: bracket of nodes a and b.
  struct Node {
    int kind = 0;
    int a = -1;
    int b = -1;
  };
  std::vector<Node> nodes;
  std::vector<std::pair<int, Rational>> terms;
  std::vector<std::pair<int, double>> termsD;
};

namespace {

std::shared_ptr<const BchProgram> buildBchProgram(int depth) {
  using namespace freeassoc;
  // log(e^X e^Y) truncated at `depth` letters, X = letter 0, Y = letter 1.
  Poly expX = exponential(letter(0), depth);
  Poly expY = exponential(letter(1), depth);
  Poly logProduct = logarithm(multiply(expX, expY, depth), depth);

  auto program = std::make_shared<BchProgram>();
  std::map<Word, int> nodeOf;
  std::function<int(const Word&)> nodeFor = [&](const Word& w) -> int {
    auto it = nodeOf.find(w);
    if (it != nodeOf.end()) return it->second;
    BchProgram::Node node;
    if (w.size() == 1) {
      node.kind = w[0] == 0 ? 0 : 1;
    } else {
      auto [u, v] = standardFactorization(w);
      node.kind = 2;
      node.a = nodeFor(u);
      node.b = nodeFor(v);
    }
    program->nodes.push_back(node);
    const int id = static_cast<int>(program->nodes.size()) - 1;
    nodeOf.emplace(w, id);
    return id;
  };

  for (const auto& [word, coeff] : lyndonCoordinates(logProduct)) {
    // Usual BCH -> opposite group: every bracket changes sign.
    Rational c = coeff;
    if (word.size() % 2 == 0) c = -c;
    program->terms.emplace_back(nodeFor(word), c);
    program->termsD.emplace_back(program->terms.back().first, c.get_d());
  }
  return program;
}

std::shared_ptr<const BchProgram> bchProgramForDepth(int depth) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const BchProgram>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(depth);
  if (it != cache.end()) return it->second;
  auto program = buildBchProgram(depth);
  cache.emplace(depth, program);
  return program;
}

bool isZero(const Rational& q) { return sgn(q) == 0; }

}  // namespace

GradedLieAlgebra::GradedLieAlgebra(std::vector<int> weights, int depth,
                                   const std::vector<StructureConstant>& constants,
                                   std::vector<std::string> labels, std::vector<HallFactor> factors)
    : weights_(std::move(weights)), depth_(depth), labels_(std::move(labels)), factors_(std::move(factors)) {
  if (weights_.empty()) throw std::invalid_argument("algebra must have positive dimension");
  if (depth_ < 1) throw std::invalid_argument("algebra depth must be positive");
  const int n = dim();
  std::map<std::tuple<int, int, int>, Rational> table;
  std::set<std::tuple<int, int, int>> explicitEntries;
  for (const auto& c : constants) {
    if (c.i < 0 || c.j < 0 || c.k < 0 || c.i >= n || c.j >= n || c.k >= n) {
      throw std::invalid_argument("structure constant index out of range: (" + std::to_string(c.i) + "," +
                                  std::to_string(c.j) + "," + std::to_string(c.k) + ")");
    }
    table[{c.i, c.j, c.k}] += c.value;
    explicitEntries.insert({c.i, c.j, c.k});
  }
  std::vector<std::pair<std::tuple<int, int, int>, Rational>> mirrored;
  for (const auto& [key, value] : table) {
    auto [i, j, k] = key;
    if (i < j && !explicitEntries.count({j, i, k})) mirrored.push_back({{j, i, k}, -value});
  }
  for (auto& [key, value] : mirrored) table[key] = value;
  for (const auto& [key, value] : table) {
    if (isZero(value)) continue;
    auto [i, j, k] = key;
    constants_.push_back({i, j, k, value});
    constantsD_.push_back(value.get_d());
  }
  if (labels_.size() != weights_.size()) {
    labels_.clear();
    for (int j = 0; j < n; ++j) labels_.push_back("e" + std::to_string(j + 1));
  }
  if (factors_.size() != weights_.size()) factors_.assign(n, HallFactor{});
  bch_ = bchProgramForDepth(depth_);
}

GradedLieAlgebra::~GradedLieAlgebra() = default;

void GradedLieAlgebra::requireDim(std::size_t n, const char* what) const {
  if (n != weights_.size()) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(weights_.size()) +
                            " coefficients, got " + std::to_string(n));
  }
}

std::vector<int> GradedLieAlgebra::indicesOfWeight(int w) const {
  std::vector<int> out;
  for (int j = 0; j < dim(); ++j)
    if (weights_[j] == w) out.push_back(j);
  return out;
}

template <class T>
void GradedLieAlgebra::bracketRaw(const T* u, const T* v, T* out) const {
  for (std::size_t e = 0; e < constants_.size(); ++e) {
    const auto& c = constants_[e];
    if constexpr (std::is_same_v<T, double>) {
      out[c.k] += constantsD_[e] * u[c.i] * v[c.j];
    } else {
      if (isZero(u[c.i]) || isZero(v[c.j])) continue;
      out[c.k] += c.value * u[c.i] * v[c.j];
    }
  }
}

Eigen::VectorXd GradedLieAlgebra::bracket(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  requireDim(u.size(), "bracket");
  requireDim(v.size(), "bracket");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  bracketRaw(u.data(), v.data(), out.data());
  return out;
}

RVec GradedLieAlgebra::bracket(const RVec& u, const RVec& v) const {
  requireDim(u.size(), "bracket");
  requireDim(v.size(), "bracket");
  RVec out(dim());
  bracketRaw(u.data(), v.data(), out.data());
  return out;
}

Eigen::MatrixXd GradedLieAlgebra::adMatrix(const Eigen::VectorXd& g) const {
  requireDim(g.size(), "adMatrix");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
  for (std::size_t e = 0; e < constants_.size(); ++e) {
    const auto& c = constants_[e];
    m(c.k, c.j) += constantsD_[e] * g(c.i);
  }
  return m;
}

template <class T>
std::vector<T> GradedLieAlgebra::bchRaw(const T* u, const T* v) const {
  const int n = dim();
  const auto& nodes = bch_->nodes;
  std::vector<std::vector<T>> values(nodes.size());
  auto valueOf = [&](int id) -> const T* {
    const auto& node = nodes[id];
    if (node.kind == 0) return u;
    if (node.kind == 1) return v;
    return values[id].data();
  };
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const auto& node = nodes[id];
    if (node.kind != 2) continue;
    values[id].assign(n, T(0));
    bracketRaw(valueOf(node.a), valueOf(node.b), values[id].data());
  }
  std::vector<T> out(n, T(0));
  for (std::size_t t = 0; t < bch_->terms.size(); ++t) {
    const int id = bch_->terms[t].first;
    const T* x = valueOf(id);
    if constexpr (std::is_same_v<T, double>) {
      const double c = bch_->termsD[t].second;
      for (int k = 0; k < n; ++k) out[k] += c * x[k];
    } else {
      const Rational& c = bch_->terms[t].second;
      for (int k = 0; k < n; ++k)
        if (!isZero(x[k])) out[k] += c * x[k];
    }
  }
  return out;
}

Eigen::VectorXd GradedLieAlgebra::bch(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  requireDim(u.size(), "bch");
  requireDim(v.size(), "bch");
  std::vector<double> r = bchRaw(u.data(), v.data());
  return Eigen::Map<Eigen::VectorXd>(r.data(), dim());
}

RVec GradedLieAlgebra::bch(const RVec& u, const RVec& v) const {
  requireDim(u.size(), "bch");
  requireDim(v.size(), "bch");
  return bchRaw(u.data(), v.data());
}

void GradedLieAlgebra::bchJacobians(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::MatrixXd* du,
                                    Eigen::MatrixXd* dv) const {
  requireDim(u.size(), "bch");
  requireDim(v.size(), "bch");
  const int n = dim();
  const auto& nodes = bch_->nodes;
  std::vector<Eigen::VectorXd> values(nodes.size());
  std::vector<Eigen::MatrixXd> dU(nodes.size()), dV(nodes.size());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const auto& node = nodes[id];
    if (node.kind == 0) {
      values[id] = u;
      if (du) dU[id] = identity;
      if (dv) dV[id] = zero;
    } else if (node.kind == 1) {
      values[id] = v;
      if (du) dU[id] = zero;
      if (dv) dV[id] = identity;
    } else {
      const Eigen::VectorXd& a = values[node.a];
      const Eigen::VectorXd& b = values[node.b];
      values[id] = bracket(a, b);
      // d[a,b] = ad_a db - ad_b da
      const Eigen::MatrixXd adA = adMatrix(a);
      const Eigen::MatrixXd adB = adMatrix(b);
      if (du) dU[id] = adA * dU[node.b] - adB * dU[node.a];
      if (dv) dV[id] = adA * dV[node.b] - adB * dV[node.a];
    }
  }
  if (du) du->setZero(n, n);
  if (dv) dv->setZero(n, n);
  for (const auto& [id, c] : bch_->termsD) {
    if (du) *du += c * dU[id];
    if (dv) *dv += c * dV[id];
  }
}

Eigen::VectorXd GradedLieAlgebra::dilate(double lambda, const Eigen::VectorXd& v) const {
  requireDim(v.size(), "dilate");
  if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be positive");
  Eigen::VectorXd out = v;
  for (int j = 0; j < dim(); ++j) out(j) *= std::pow(lambda, weights_[j]);
  return out;
}

RVec GradedLieAlgebra::dilate(const Rational& lambda, const RVec& v) const {
  requireDim(v.size(), "dilate");
  if (sgn(lambda) <= 0) throw std::invalid_argument("dilation factor must be positive");
  RVec out = v;
  for (int j = 0; j < dim(); ++j) {
    Rational scale = 1;
    for (int p = 0; p < weights_[j]; ++p) scale *= lambda;
    out[j] *= scale;
  }
  return out;
}

Eigen::VectorXd GradedLieAlgebra::adjoint(const Eigen::VectorXd& g, const Eigen::VectorXd& v) const {
  requireDim(g.size(), "adjoint");
  requireDim(v.size(), "adjoint");
  Eigen::VectorXd out = v;
  Eigen::VectorXd term = v;
  for (int k = 1; k <= depth_; ++k) {
    term = -bracket(g, term) / static_cast<double>(k);
    out += term;
  }
  return out;
}

RVec GradedLieAlgebra::adjoint(const RVec& g, const RVec& v) const {
  requireDim(g.size(), "adjoint");
  requireDim(v.size(), "adjoint");
  RVec out = v;
  RVec term = v;
  for (int k = 1; k <= depth_; ++k) {
    term = bracket(g, term);
    bool allZero = true;
    for (auto& x : term) {
      x = -x / k;
      allZero = allZero && isZero(x);
    }
    if (allZero) break;
    for (int j = 0; j < dim(); ++j) out[j] += term[j];
  }
  return out;
}

std::vector<double> GradedLieAlgebra::blockNorms(const Eigen::VectorXd& v) const {
  requireDim(v.size(), "blockNorms");
  std::vector<double> sq(depth_, 0.0);
  for (int j = 0; j < dim(); ++j) sq[weights_[j] - 1] += v(j) * v(j);
  for (double& s : sq) s = std::sqrt(s);
  return sq;
}

double GradedLieAlgebra::quasiNorm(const Eigen::VectorXd& v) const {
  std::vector<double> blocks = blockNorms(v);
  double q = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    q = std::max(q, std::pow(blocks[i], 1.0 / static_cast<double>(i + 1)));
  return q;
}

AlgebraPtr freeNilpotent(int numGenerators, const std::vector<int>& generatorWeights, int depth) {
  using namespace freeassoc;
  if (numGenerators < 1) throw std::invalid_argument("free nilpotent algebra needs at least one generator");
  std::vector<int> gw = generatorWeights;
  if (gw.empty()) gw.assign(numGenerators, 1);
  if (static_cast<int>(gw.size()) != numGenerators)
    throw std::invalid_argument("one weight per generator is required");
  for (int w : gw)
    if (w < 1) throw std::invalid_argument("generator weights must be at least 1");
  const int maxWeight = *std::max_element(gw.begin(), gw.end());
  if (depth < maxWeight)
    throw std::invalid_argument("depth " + std::to_string(depth) + " is below the largest generator weight " +
                                std::to_string(maxWeight));

  const int minWeight = *std::min_element(gw.begin(), gw.end());
  auto wordWeight = [&](const Word& w) {
    int s = 0;
    for (unsigned char c : w) s += gw[c];
    return s;
  };
  std::vector<Word> words;
  for (const Word& w : lyndonWords(numGenerators, depth / minWeight))
    if (wordWeight(w) <= depth) words.push_back(w);
  std::stable_sort(words.begin(), words.end(), [](const Word& a, const Word& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });

  const int n = static_cast<int>(words.size());
  std::map<Word, int> indexOf;
  for (int k = 0; k < n; ++k) indexOf[words[k]] = k;

  std::vector<int> weights(n);
  std::vector<std::string> labels(n);
  std::vector<HallFactor> factors(n);
  std::vector<Poly> expansions(n);
  for (int k = 0; k < n; ++k) {
    weights[k] = wordWeight(words[k]);
    expansions[k] = lyndonExpansion(words[k]);
    if (words[k].size() == 1) {
      factors[k].generator = static_cast<unsigned char>(words[k][0]);
      labels[k] = "X" + std::to_string(factors[k].generator + 1);
    } else {
      auto [u, v] = standardFactorization(words[k]);
      factors[k].left = indexOf.at(u);
      factors[k].right = indexOf.at(v);
      labels[k] = "[" + labels[factors[k].left] + "," + labels[factors[k].right] + "]";
    }
  }

  std::vector<StructureConstant> constants;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (weights[i] + weights[j] > depth) continue;
      Poly commutator = subtract(multiply(expansions[i], expansions[j]), multiply(expansions[j], expansions[i]));
      for (const auto& [word, coeff] : lyndonCoordinates(commutator)) {
        constants.push_back({i, j, indexOf.at(word), coeff});
      }
    }
  }
  return std::make_shared<GradedLieAlgebra>(std::move(weights), depth, constants, std::move(labels),
                                            std::move(factors));
}

LieVector basisVector(const AlgebraPtr& algebra, int j) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(algebra->dim());
  v(j) = 1.0;
  return {algebra, v};
}

ExactLieVector exactBasisVector(const AlgebraPtr& algebra, int j) {
  RVec v(algebra->dim());
  v[j] = 1;
  return {algebra, v};
}

LieVector negate(const LieVector& v) { return {v.algebra(), -v.coeffs()}; }

ExactLieVector negate(const ExactLieVector& v) {
  RVec c = v.coeffs();
  for (auto& x : c) x = -x;
  return {v.algebra(), c};
}

LieVector dilate(double lambda, const LieVector& v) { return {v.algebra(), v.algebra()->dilate(lambda, v.coeffs())}; }

ExactLieVector dilate(const Rational& lambda, const ExactLieVector& v) {
  return {v.algebra(), v.algebra()->dilate(lambda, v.coeffs())};
}

double quasiNorm(const LieVector& v) { return v.algebra()->quasiNorm(v.coeffs()); }

SubalgebraReport isSubalgebra(const GradedLieAlgebra& algebra, const Subspace& s, double tol) {
  if (s.ambientDim() != algebra.dim()) throw DimensionMismatch("subspace does not live in this algebra");
  SubalgebraReport report;
  const Eigen::MatrixXd& b = s.basis();
  for (int a = 0; a < s.dim(); ++a) {
    for (int c = a + 1; c < s.dim(); ++c) {
      Eigen::VectorXd br = algebra.bracket(b.col(a), b.col(c));
      report.residual = std::max(report.residual, s.projectPerp(br).norm());
    }
  }
  report.isSubalgebra = report.residual <= tol;
  return report;
}

AlgebraReport validateAlgebra(const GradedLieAlgebra& algebra) {
  AlgebraReport report;
  const int n = algebra.dim();
  const int depth = algebra.depth();
  for (int j = 0; j < n; ++j) {
    if (algebra.weight(j) < 1 || algebra.weight(j) > depth) report.violations.push_back({"weight", j, -1, -1, 0.0});
  }
  std::map<std::tuple<int, int, int>, Rational> table;
  for (const auto& c : algebra.constants()) table[{c.i, c.j, c.k}] = c.value;
  for (const auto& [key, value] : table) {
    auto [i, j, k] = key;
    if (i == j) {
      report.violations.push_back({"antisymmetry", i, j, k, std::abs(value.get_d())});
      continue;
    }
    auto mirror = table.find({j, i, k});
    Rational sum = value + (mirror == table.end() ? Rational(0) : mirror->second);
    if (i < j && !isZero(sum)) report.violations.push_back({"antisymmetry", i, j, k, std::abs(sum.get_d())});
    if (i > j && mirror == table.end()) report.violations.push_back({"antisymmetry", i, j, k, std::abs(sum.get_d())});
    const int w = algebra.weight(i) + algebra.weight(j);
    if (i < j && (algebra.weight(k) != w || w > depth))
      report.violations.push_back({"grading", i, j, k, std::abs(value.get_d())});
  }
  auto unit = [n](int j) {
    RVec v(n);
    v[j] = 1;
    return v;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int l = j + 1; l < n; ++l) {
        RVec ei = unit(i), ej = unit(j), el = unit(l);
        RVec a = algebra.bracket(ei, algebra.bracket(ej, el));
        RVec b = algebra.bracket(ej, algebra.bracket(el, ei));
        RVec c = algebra.bracket(el, algebra.bracket(ei, ej));
        double residual = 0.0;
        for (int k = 0; k < n; ++k) {
          Rational s = a[k] + b[k] + c[k];
          residual = std::max(residual, std::abs(s.get_d()));
          if (!isZero(s) && residual == 0.0) residual = 1e-300;
        }
        if (residual > 0.0) report.violations.push_back({"jacobi", i, j, l, residual});
      }
    }
  }
  return report;
}

}  // namespace nilpotentizer

#include "vsbo/benchmarks.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vsbo {

namespace {

constexpr double kBoxTol = 1e-9;

const double kHmAlpha[4] = {1.0, 1.2, 3.0, 3.2};
const double kHmA[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                           {0.05, 10, 17, 0.1, 8, 14},
                           {3, 3.5, 1.7, 10, 17, 8},
                           {17, 8, 0.05, 10, 0.1, 14}};
const double kHmP[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                           {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                           {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                           {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

const double kHmArgmax[6] = {0.20168950923409584, 0.15001068876417922, 0.4768739724329622,
                             0.275332428312954,   0.3116516115751367,  0.6573005293804641};

void check_in(const Vector& x, const Box& box, const char* what) {
  if (x.size() != box.dim()) throw std::invalid_argument(std::string(what) + ": wrong input dimension");
  if (!x.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
  if (!box.contains(x, kBoxTol)) throw std::invalid_argument(std::string(what) + ": input outside the box");
}

Box branin_box() { return Box(Vector((Vector(2) << -5.0, 0.0).finished()), Vector((Vector(2) << 10.0, 10.0).finished())); }

struct Block {
  Box box;
  int width;
  std::function<double(const Vector&)> f;  // unchecked
  double max;
  Vector argmax;
};

Block block_for(const std::string& name) {
  if (name == "F_branin") {
    return {branin_box(), 2, [](const Vector& v) { return -branin_unchecked(v[0], v[1]); }, kBraninMax,
            (Vector(2) << std::numbers::pi, 2.275).finished()};
  }
  if (name == "F_hm6") {
    return {Box::unit(6), 6, hartmann6_unchecked, kHartmann6Max, Eigen::Map<const Vector>(kHmArgmax, 6)};
  }
  if (name == "F_ST4") {
    return {Box::uniform(4, -5.0, 5.0), 4,
            [](const Vector& v) {
              double s = 0.0;
              for (int j = 0; j < 4; ++j) s += styblinski_tang_term(v[j]);
              return s;
            },
            4.0 * kStyblinskiTangTermMax, Vector::Constant(4, kStyblinskiTangArgmax)};
  }
  throw std::invalid_argument("unknown composite benchmark: " + name);
}

}  // namespace

double branin_unchecked(double x1, double x2) {
  const double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

double hartmann6_unchecked(const Vector& x) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double e = 0.0;
    for (int j = 0; j < 6; ++j) e += kHmA[i][j] * (x[j] - kHmP[i][j]) * (x[j] - kHmP[i][j]);
    s += kHmAlpha[i] * std::exp(-e);
  }
  return s;
}

double styblinski_tang_term(double x) { return -0.5 * (x * x * x * x - 16.0 * x * x + 5.0 * x); }

double branin(const Vector& x) {
  check_in(x, branin_box(), "branin");
  return -branin_unchecked(x[0], x[1]);
}

double hartmann6(const Vector& x) {
  check_in(x, Box::unit(6), "hartmann6");
  return hartmann6_unchecked(x);
}

double styblinski_tang4(const Vector& x) {
  check_in(x, Box::uniform(4, -5.0, 5.0), "styblinski_tang4");
  double s = 0.0;
  for (int j = 0; j < 4; ++j) s += styblinski_tang_term(x[j]);
  return s;
}

Benchmark branin_benchmark() {
  Benchmark b;
  b.name = "branin";
  b.dim = 2;
  b.box = branin_box();
  b.objective = branin;
  b.known_max = kBraninMax;
  b.known_argmax = (Vector(2) << std::numbers::pi, 2.275).finished();
  b.important_dims = {0, 1};
  b.tiers = {{0, 1}};
  return b;
}

Benchmark hartmann6_benchmark() {
  Benchmark b;
  b.name = "hartmann6";
  b.dim = 6;
  b.box = Box::unit(6);
  b.objective = hartmann6;
  b.known_max = kHartmann6Max;
  b.known_argmax = Eigen::Map<const Vector>(kHmArgmax, 6);
  b.important_dims = all_dims(6);
  b.tiers = {b.important_dims};
  return b;
}

Benchmark styblinski_tang4_benchmark() {
  Benchmark b;
  b.name = "st4";
  b.dim = 4;
  b.box = Box::uniform(4, -5.0, 5.0);
  b.objective = styblinski_tang4;
  b.known_max = 4.0 * kStyblinskiTangTermMax;
  b.known_argmax = Vector::Constant(4, kStyblinskiTangArgmax);
  b.important_dims = all_dims(4);
  b.tiers = {b.important_dims};
  return b;
}

Benchmark composite(const std::string& name, int dim) {
  const Block blk = block_for(name);
  const int w = blk.width;
  if (dim < 3 * w) {
    throw std::invalid_argument(name + " needs at least " + std::to_string(3 * w) + " dimensions");
  }
  Benchmark b;
  b.name = name;
  b.dim = dim;
  b.box = Box::unit(dim);
  Vector argmax = Vector::Constant(dim, 0.5);
  for (int t = 0; t < 3; ++t) {
    b.box.lo.segment(t * w, w) = blk.box.lo;
    b.box.hi.segment(t * w, w) = blk.box.hi;
    argmax.segment(t * w, w) = blk.argmax;
    IndexSet tier;
    for (int j = 0; j < w; ++j) tier.push_back(t * w + j);
    b.tiers.push_back(tier);
  }
  // Unrelated dims: [0, 1] for Branin and Hartmann6 blocks, the block's own
  // range for Styblinski-Tang.
  if (name == "F_ST4") {
    b.box.lo.tail(dim - 3 * w).setConstant(-5.0);
    b.box.hi.tail(dim - 3 * w).setConstant(5.0);
    argmax.tail(dim - 3 * w).setZero();
  }
  b.important_dims = b.tiers.front();
  b.known_max = 1.11 * blk.max;
  b.known_argmax = argmax;
  const Box box = b.box;
  b.objective = [box, w, f = blk.f, name](const Vector& x) {
    check_in(x, box, name.c_str());
    return f(x.segment(0, w)) + 0.1 * f(x.segment(w, w)) + 0.01 * f(x.segment(2 * w, w));
  };
  return b;
}

Matrix haar_orthogonal(int dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("haar_orthogonal: dim must be >= 1");
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Benchmark rotated_hartmann6(const Matrix& projection) {
  if (projection.rows() != 6 || projection.cols() < 6) {
    throw std::invalid_argument("rotated_hartmann6: projection must be 6 x D with D >= 6");
  }
  const int dim = static_cast<int>(projection.cols());
  Benchmark b;
  b.name = "rot_hm6";
  b.dim = dim;
  b.box = Box::uniform(dim, -1.0, 1.0);
  const Box box = b.box;
  b.objective = [projection, box](const Vector& x) {
    check_in(x, box, "rot_hm6");
    const Vector z = (projection * x).cwiseMax(0.0).cwiseMin(1.0);
    return hartmann6_unchecked(z);
  };
  return b;
}

Benchmark rotated_hartmann6(int dim, Rng& rng) {
  if (dim < 6) throw std::invalid_argument("rotated_hartmann6: dim must be >= 6");
  return rotated_hartmann6(Matrix(haar_orthogonal(dim, rng).topRows(6)));
}

std::vector<std::string> benchmark_names() {
  return {"branin", "hartmann6", "st4", "F_branin", "F_hm6", "F_ST4", "rot_hm6"};
}

Benchmark make_benchmark(const std::string& name, int dim, std::uint64_t seed) {
  auto fixed = [&](Benchmark b) {
    if (dim > 0 && dim != b.dim) throw std::invalid_argument(name + " has fixed dimension " + std::to_string(b.dim));
    return b;
  };
  if (name == "branin") return fixed(branin_benchmark());
  if (name == "hartmann6") return fixed(hartmann6_benchmark());
  if (name == "st4") return fixed(styblinski_tang4_benchmark());
  if (name == "F_branin") return composite(name, dim > 0 ? dim : 20);
  if (name == "F_hm6" || name == "F_ST4") return composite(name, dim > 0 ? dim : 30);
  if (name == "rot_hm6") {
    Rng rng(derive_seed(seed, {0x726f74ULL}));
    return rotated_hartmann6(dim > 0 ? dim : 100, rng);
  }
  throw std::invalid_argument("unknown benchmark: " + name);
}

}  // namespace vsbo

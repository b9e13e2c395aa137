#include "spherelab/spheres.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spherelab/random.hpp"

namespace spherelab {
namespace {

constexpr double kOnSphereTolerance = 1e-9;
constexpr double kNormTolerance = 1e-12;
constexpr char kCsvHeader[] = "# d,r1,r2,q,seed,adversarial";

bool near_radius(double norm, double radius, double tol) {
  return std::abs(norm - radius) <= tol * radius;
}

double norm_of(Point x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    parts.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(const std::string& text) {
  std::size_t first = text.find_first_not_of(" \t\r");
  std::size_t last = text.find_last_not_of(" \t\r");
  if (first == std::string::npos) throw std::invalid_argument("empty CSV field");
  T value{};
  const char* begin = text.data() + first;
  const char* end = text.data() + last + 1;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("malformed CSV number '" + text + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(Balance balance) {
  return balance == Balance::ExactBalanced ? "exact" : "bernoulli";
}

Balance parse_balance(std::string_view text) {
  if (text == "exact" || text == "ExactBalanced") return Balance::ExactBalanced;
  if (text == "bernoulli" || text == "Bernoulli") return Balance::Bernoulli;
  throw std::invalid_argument("unknown balance mode '" + std::string(text) + "'");
}

void SpheresConfig::validate() const {
  if (dim < 2) throw std::invalid_argument("spheres dim must be >= 2");
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw std::invalid_argument("sphere radii must be > 0");
  if (!(r1 < r2)) throw std::invalid_argument("inner radius r1 must be strictly below r2");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("class probability q must lie in (0, 1)");
  if (balance == Balance::ExactBalanced && q != 0.5) {
    throw std::invalid_argument("ExactBalanced sampling requires q = 1/2");
  }
}

void SpheresDataset::check_invariants() const {
  if (y.size() != X.rows()) throw std::logic_error("dataset has mismatched X and y sizes");
  if (X.cols() != config.dim) throw std::logic_error("dataset dimension differs from its config");
  Index positives = 0;
  for (Index i = 0; i < size(); ++i) {
    const double label = y(i);
    if (label != 1.0 && label != -1.0) throw std::logic_error("label outside {-1, +1}");
    if (label > 0) ++positives;
    const double norm = norm_of(point(i));
    const bool inner = near_radius(norm, config.r1, kNormTolerance);
    const bool outer = near_radius(norm, config.r2, kNormTolerance);
    if (!inner && !outer) {
      throw std::logic_error(fmt::format("row {} has norm {} on neither sphere", i, norm));
    }
    if (!adversarial && (label > 0) != inner) {
      throw std::logic_error(fmt::format("row {} label {} disagrees with its radius", i, label));
    }
  }
  if (config.balance == Balance::ExactBalanced) {
    const Index half = size() / 2;
    if (size() % 2 != 0 || positives != half) {
      throw std::logic_error("ExactBalanced dataset is not split evenly");
    }
    const double leading = adversarial ? -1.0 : 1.0;
    for (Index i = 0; i < half; ++i) {
      if (y(i) != leading) throw std::logic_error("ExactBalanced rows are not ordered by class");
    }
  }
}

SpheresDataset sample(const SpheresConfig& config, Index n) {
  config.validate();
  if (n < 2) throw std::invalid_argument("sample size must be >= 2");
  if (config.balance == Balance::ExactBalanced && n % 2 != 0) {
    throw std::invalid_argument("ExactBalanced sampling needs an even sample size");
  }
  Rng rng(config.seed);
  SpheresDataset data;
  data.config = config;
  data.X.resize(n, config.dim);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    bool inner = false;
    if (config.balance == Balance::ExactBalanced) {
      inner = i < n / 2;
    } else {
      inner = rng.uniform() < config.q;
    }
    auto row = data.X.row(i);
    for (Index j = 0; j < config.dim; ++j) row(j) = rng.normal();
    const double radius = inner ? config.r1 : config.r2;
    row *= radius / row.norm();
    data.y(i) = inner ? 1.0 : -1.0;
  }
  return data;
}

Vector project(Point x, const SpheresConfig& config) {
  if (x.size() != static_cast<std::size_t>(config.dim)) {
    throw std::invalid_argument("project: point dimension does not match config");
  }
  const double norm = norm_of(x);
  double factor = 0.0;
  if (near_radius(norm, config.r1, kOnSphereTolerance)) {
    factor = config.r2 / config.r1;
  } else if (near_radius(norm, config.r2, kOnSphereTolerance)) {
    factor = config.r1 / config.r2;
  } else {
    throw std::invalid_argument(fmt::format("project: norm {} lies on neither sphere", norm));
  }
  Vector out(static_cast<Index>(x.size()));
  for (Index j = 0; j < out.size(); ++j) out(j) = factor * x[static_cast<std::size_t>(j)];
  return out;
}

SpheresDataset adversarial_set(const SpheresDataset& data) {
  SpheresDataset adv;
  adv.config = data.config;
  adv.adversarial = !data.adversarial;
  adv.X.resize(data.X.rows(), data.X.cols());
  for (Index i = 0; i < data.size(); ++i) adv.X.row(i) = project(data.point(i), data.config).transpose();
  adv.y = -data.y;
  return adv;
}

void save_csv(const SpheresDataset& data, std::ostream& out) {
  const auto& c = data.config;
  out << kCsvHeader << '\n';
  out << fmt::format("# {},{:.17g},{:.17g},{:.17g},{},{}\n", c.dim, c.r1, c.r2, c.q, c.seed,
                     data.adversarial ? 1 : 0);
  std::string line;
  for (Index i = 0; i < data.size(); ++i) {
    line.clear();
    for (Index j = 0; j < data.X.cols(); ++j) {
      line += fmt::format("{:.17g},", data.X(i, j));
    }
    line += fmt::format("{:.17g}\n", data.y(i));
    out << line;
  }
}

SpheresDataset load_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kCsvHeader, 0) != 0) {
    throw std::invalid_argument("dataset CSV must start with '" + std::string(kCsvHeader) + "'");
  }
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw std::invalid_argument("dataset CSV is missing its parameter line");
  }
  const auto fields = split(line.substr(1), ',');
  if (fields.size() != 6) throw std::invalid_argument("dataset CSV parameter line needs 6 fields");

  SpheresDataset data;
  auto& c = data.config;
  c.dim = parse_number<int>(fields[0]);
  c.r1 = parse_number<double>(fields[1]);
  c.r2 = parse_number<double>(fields[2]);
  c.q = parse_number<double>(fields[3]);
  c.seed = parse_number<std::uint64_t>(fields[4]);
  data.adversarial = parse_number<int>(fields[5]) != 0;
  c.balance = Balance::Bernoulli;
  c.validate();

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != static_cast<std::size_t>(c.dim) + 1) {
      throw std::invalid_argument(fmt::format("dataset CSV row {} has {} fields, expected {}", rows,
                                              cells.size(), c.dim + 1));
    }
    for (const auto& cell : cells) values.push_back(parse_number<double>(cell));
    ++rows;
  }
  data.X.resize(rows, c.dim);
  data.y.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    const auto base = static_cast<std::size_t>(i * (c.dim + 1));
    for (Index j = 0; j < c.dim; ++j) data.X(i, j) = values[base + static_cast<std::size_t>(j)];
    data.y(i) = values[base + static_cast<std::size_t>(c.dim)];
  }

  // The balance mode is not stored; recover ExactBalanced from the layout.
  if (c.q == 0.5 && rows % 2 == 0 && rows > 0) {
    const double leading = data.adversarial ? -1.0 : 1.0;
    bool ordered = true;
    for (Index i = 0; i < rows && ordered; ++i) ordered = data.y(i) == (i < rows / 2 ? leading : -leading);
    if (ordered) c.balance = Balance::ExactBalanced;
  }
  data.check_invariants();
  return data;
}

}  // namespace spherelab

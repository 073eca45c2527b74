#include "rcca/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "rcca/error.hpp"
#include "rcca/random.hpp"

namespace rcca::twoview {
namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("synthetic spec: bad value '" + std::string(text) + "' for " + std::string(key), 0);
  return v;
}

}  // namespace

PowerLawSpec parse_power_law_spec(std::string_view text) {
  constexpr std::string_view kPrefix = "power-law";
  if (text.substr(0, kPrefix.size()) != kPrefix)
    throw ParseError("synthetic spec must start with 'power-law', got '" + std::string(text) + "'", 0);
  text.remove_prefix(kPrefix.size());
  PowerLawSpec spec;
  if (text.empty()) return spec;
  if (text.front() != ':') throw ParseError("synthetic spec: expected ':' after 'power-law'", 0);
  text.remove_prefix(1);
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParseError("synthetic spec: expected key=value, got '" + std::string(item) + "'", 0);
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "n") spec.n = parse_number<std::size_t>(key, value);
    else if (key == "da") spec.d_a = parse_number<std::size_t>(key, value);
    else if (key == "db") spec.d_b = parse_number<std::size_t>(key, value);
    else if (key == "rank") spec.rank = parse_number<std::size_t>(key, value);
    else if (key == "decay") spec.decay = parse_number<double>(key, value);
    else if (key == "noise") spec.noise = parse_number<double>(key, value);
    else if (key == "mean") spec.mean = parse_number<double>(key, value);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else throw ParseError("synthetic spec: unknown key '" + std::string(key) + "'", 0);
  }
  if (spec.n == 0 || spec.d_a == 0 || spec.d_b == 0 || spec.rank == 0)
    throw ParseError("synthetic spec: n, da, db and rank must be positive", 0);
  return spec;
}

std::string to_string(const PowerLawSpec& spec) {
  std::ostringstream os;
  os << "power-law:n=" << spec.n << ",da=" << spec.d_a << ",db=" << spec.d_b << ",rank=" << spec.rank
     << ",decay=" << spec.decay << ",noise=" << spec.noise << ",mean=" << spec.mean << ",seed=" << spec.seed;
  return os.str();
}

TwoViewDataset generate_power_law(const PowerLawSpec& spec) {
  Rng rng(spec.seed);
  const DenseMatrix w_a = rng.gaussian_matrix(spec.rank, spec.d_a);
  const DenseMatrix w_b = rng.gaussian_matrix(spec.rank, spec.d_b);
  std::vector<double> m_a(spec.d_a);
  std::vector<double> m_b(spec.d_b);
  for (double& v : m_a) v = rng.gaussian();
  for (double& v : m_b) v = rng.gaussian();

  std::vector<double> scale(spec.rank);
  for (std::size_t j = 0; j < spec.rank; ++j) scale[j] = std::pow(static_cast<double>(j + 1), -spec.decay);

  DenseMatrix a(spec.n, spec.d_a);
  DenseMatrix b(spec.n, spec.d_b);
  std::vector<double> z(spec.rank);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.rank; ++j) z[j] = scale[j] * rng.gaussian();
    for (std::size_t c = 0; c < spec.d_a; ++c) {
      double v = spec.mean * m_a[c];
      for (std::size_t j = 0; j < spec.rank; ++j) v += z[j] * w_a(j, c);
      a(i, c) = v + spec.noise * rng.gaussian();
    }
    for (std::size_t c = 0; c < spec.d_b; ++c) {
      double v = spec.mean * m_b[c];
      for (std::size_t j = 0; j < spec.rank; ++j) v += z[j] * w_b(j, c);
      b(i, c) = v + spec.noise * rng.gaussian();
    }
  }
  return from_dense(a, b);
}

}  // namespace rcca::twoview

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "rcca/twoview.hpp"

namespace rcca::twoview {

/// Latent-factor two-view generator with a power-law cross spectrum.
///
///   z_i ~ N(0, I_rank),  s_j = (j + 1)^(-decay)
///   a_i = W_a^T diag(s) z_i + noise * e_i + mean * m_a
///   b_i = W_b^T diag(s) z_i + noise * f_i + mean * m_b
///
/// with W_a, W_b, e, f, m_a, m_b i.i.d. standard normal. Everything is drawn
/// from one Rng seeded with `seed`, in the order W_a, W_b, m_a, m_b, then
/// row by row (z, e, f).
struct PowerLawSpec {
  std::size_t n = 2000;
  std::size_t d_a = 40;
  std::size_t d_b = 40;
  std::size_t rank = 10;
  double decay = 1.0;
  double noise = 1.0;
  double mean = 0.0;
  std::uint64_t seed = 1;
};

/// Parses "power-law:n=2000,da=40,db=40,rank=10,decay=1,noise=1,mean=0,seed=1".
/// Omitted keys keep their defaults. Throws ParseError on unknown keys.
PowerLawSpec parse_power_law_spec(std::string_view text);
std::string to_string(const PowerLawSpec& spec);

TwoViewDataset generate_power_law(const PowerLawSpec& spec);

}  // namespace rcca::twoview

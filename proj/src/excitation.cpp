#include "irlobs/excitation.hpp"

#include <cmath>
#include <stdexcept>

namespace irlobs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_uniform(std::uint64_t seed, int channel, std::int64_t slot) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(channel));
  h = splitmix64(h ^ static_cast<std::uint64_t>(slot));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

void ExcitationSpec::validate() const {
  if (channels < 0) throw std::invalid_argument("excitation: negative channel count");
  if (static_cast<int>(terms.size()) > channels)
    throw std::invalid_argument("excitation: more term lists than channels");
  for (const auto& channel_terms : terms) {
    for (const auto& term : channel_terms) {
      if (!std::isfinite(term.amplitude) || !std::isfinite(term.angular_frequency))
        throw std::invalid_argument("excitation: non-finite sinusoid term");
    }
  }
  if (random) {
    if (!(random->hold > 0.0))
      throw std::invalid_argument("excitation: hold interval must be > 0");
    if (!std::isfinite(random->lower) || !std::isfinite(random->upper) ||
        random->upper < random->lower)
      throw std::invalid_argument("excitation: bad uniform range");
  }
}

double excitation(const ExcitationSpec& spec, double t, int channel) {
  if (channel < 0 || channel >= spec.channels) throw std::out_of_range("bad channel");
  if (spec.cutoff && t >= *spec.cutoff) return 0.0;
  double value = 0.0;
  if (channel < static_cast<int>(spec.terms.size())) {
    for (const auto& term : spec.terms[static_cast<std::size_t>(channel)]) {
      const double arg = term.angular_frequency * t;
      value += term.amplitude * (term.phase == PhaseKind::kSin ? std::sin(arg)
                                                               : std::cos(arg));
    }
  }
  if (spec.random) {
    const auto& r = *spec.random;
    // Nudge so that grid times t = k * hold land in slot k despite rounding.
    const auto slot = static_cast<std::int64_t>(std::floor(t / r.hold + 1e-9));
    value += r.lower + (r.upper - r.lower) * unit_uniform(r.seed, channel, slot);
  }
  return value;
}

Eigen::VectorXd excitation_vector(const ExcitationSpec& spec, double t) {
  Eigen::VectorXd out(spec.channels);
  for (int i = 0; i < spec.channels; ++i) out(i) = excitation(spec, t, i);
  return out;
}

}  // namespace irlobs

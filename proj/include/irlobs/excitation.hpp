#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace irlobs {

enum class PhaseKind { kSin, kCos };

struct SinusoidTerm {
  double amplitude = 0.0;
  double angular_frequency = 0.0;  // rad/s
  PhaseKind phase = PhaseKind::kSin;
};

/// Piecewise-constant uniform noise, redrawn every `hold` seconds.
struct UniformRandomSpec {
  double lower = 0.0;
  double upper = 1.0;
  double hold = 0.005;
  std::uint64_t seed = 0;
};

/// Known additive probing signal u_exc(t) injected into each control channel.
struct ExcitationSpec {
  int channels = 0;
  std::vector<std::vector<SinusoidTerm>> terms;  // per channel, may be empty
  std::optional<UniformRandomSpec> random;
  /// The signal is identically zero from this time on (loss of excitation).
  std::optional<double> cutoff;

  /// Throws std::invalid_argument on non-finite amplitudes, a non-positive
  /// hold interval, or more term lists than channels.
  void validate() const;
};

/// Value of channel `channel` at time t. Throws std::out_of_range("bad
/// channel") for an invalid channel. Random components are a pure function of
/// (seed, channel, floor(t / hold)).
double excitation(const ExcitationSpec& spec, double t, int channel);

Eigen::VectorXd excitation_vector(const ExcitationSpec& spec, double t);

}  // namespace irlobs

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "ghostdet/image.hpp"
#include "ghostdet/random.hpp"

namespace ghostdet {

/// Number of segments in the primary mirror. Any N >= 2 is accepted.
struct MirrorConfig {
  int n_segments = 4;
};

/// Largest ghost offset, in pixels, along either axis.
inline constexpr int kMaxOffset = 15;

enum class OffsetMode { random, proportional };

std::string_view to_string(OffsetMode mode);
OffsetMode parse_offset_mode(std::string_view text);

/// One draw of the misalignment model: k of N segments misaligned, blended at
/// intensity k / N with a (tx, ty) pixel offset.
struct GhostParams {
  int n_segments = 4;
  int k_misaligned = 0;
  double intensity = 0.0;
  int tx = 0;
  int ty = 0;
  OffsetMode offset_mode = OffsetMode::proportional;
};

/// k / n. Requires n >= 2 and 0 <= k <= n - 1.
double intensity_for(int k, int n);

/// Pixel offset for k misaligned segments.
///
/// random: tx and ty independently uniform in [0, 15] (k = 0 gives (0, 0)).
/// proportional: tx = ty = round(15 k / (n - 1)).
std::pair<int, int> offset_for(int k, int n, OffsetMode mode, Rng& rng);

/// Validated GhostParams for (k, n), drawing the offset from `rng`.
GhostParams make_ghost_params(int k, int n, OffsetMode mode, Rng& rng);

/// blend(img, translate(img, tx, ty, mode), intensity). k = 0 returns img.
GrayImage inject_ghost(const GrayImage& img, const GhostParams& params,
                       TranslationMode mode = TranslationMode::circular);

inline constexpr double kDefaultSpectralExponent = 1.5;

/// Real Gaussian random field with spectral amplitude |f|^-alpha and uniform
/// random phase, affinely rescaled to [0, 1]. Deterministic in its arguments.
GrayImage synth_ground_image(std::size_t size, double alpha, std::uint64_t seed);

}  // namespace ghostdet

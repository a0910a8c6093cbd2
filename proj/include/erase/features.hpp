#pragma once

#include "erase/spectral.hpp"
#include "erase/stats.hpp"
#include "erase/trials.hpp"

#include <string>
#include <vector>

namespace erase {

struct NamedBand {
  std::string name;
  FrequencyBand band;
};

inline const NamedBand kMuNamedBand{"mu", kMuBand};
inline const NamedBand kHfNamedBand{"hf", kHighFrequencyBand};

/// Raw per-trial band power for each band, idle and movement phases.
std::vector<BandPowerSeries> trial_band_powers(const std::vector<TrialSegments>& trials,
                                               const std::vector<NamedBand>& bands, StftParams params = {});

/// Mean of the movement-phase values over the unflagged channels in `rows` (all rows when empty).
double mean_movement(const BandPowerSeries& z, const std::vector<std::size_t>& rows = {});

}  // namespace erase

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetycube/cube.h"

namespace safetycube {

/// The cube cannot support the requested report.
class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario1Options {
  std::vector<std::string> speed_spots{"Spot I", "Spot F"};
};

struct Scenario2Options {
  std::string school_spot = "Spot E";
  std::string other_spot = "Spot G";
};

/// Scripts the reports run, in listing form.
std::string scenario1_share_script();
std::string scenario1_fence_script();
std::string scenario1_negative_psm_script();
std::string scenario1_speed_script(const std::string& spot);
enum class Scenario2View { speed, pcr_level, behavioral_feature };
std::string scenario2_script(Scenario2View view, const std::string& school_spot, const std::string& other_spot);

/// Non-yielding (psm < 0) shares over unsignalized interactive scenes by day/night and spot,
/// the fence dice, negative PSM distributions and per-speed-bin PSM series.
nlohmann::json report_scenario1(const Cube& cube, const Scenario1Options& options = {});
/// Scene ratios by speed bin, by PCR level and by speed bin within each PCR level for a spot pair.
nlohmann::json report_scenario2(const Cube& cube, const Scenario2Options& options = {});

}  // namespace safetycube

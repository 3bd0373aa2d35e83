#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <json.hpp>

#include "datafix/correct.hpp"
#include "datafix/locate.hpp"
#include "datafix/metrics.hpp"
#include "datafix/simulator.hpp"

namespace datafix {

/// Version tag written into every report.
inline constexpr int kReportVersion = 1;

nlohmann::json to_json(const LocateReport& report);
nlohmann::json to_json(const CorrectReport& report);
nlohmann::json to_json(const LocalizationScore& score);
nlohmann::json to_json(const DivergenceScores& scores);
nlohmann::json to_json(const CorrectionScore& score);
/// Parameters of a simulated pair (not the full covariance matrices).
nlohmann::json to_json(const SimSpec& spec, std::size_t rows);

/// Divergence against columns removed, with the processed curve and the
/// knee marked when refinement ran.
std::string render_curve_svg(const LocateReport& report);

}  // namespace datafix

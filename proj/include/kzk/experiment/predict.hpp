#pragma once

#include <optional>

#include <json.hpp>

#include "kzk/scaling_analytics.hpp"

namespace kzk {

/// Generalized critical-surface prediction as a JSON object.
inline nlohmann::json run_predict(const GeneralizedCriticalParams& params,
                                  std::optional<double> C_user = std::nullopt) {
  const double C = C_user.value_or(kz_constant());
  const GeneralizedScaling s = generalized_scaling(params, C);
  return {{"d", params.d},
          {"D", params.D},
          {"alpha", params.alpha},
          {"L", params.L},
          {"tau", params.tau},
          {"C", C},
          {"exponent", s.exponent},
          {"cumulant", s.cumulant},
          {"b_scaling_exponents", {{"L", s.b_scaling_exponents.first}, {"tau", s.b_scaling_exponents.second}}}};
}

}  // namespace kzk

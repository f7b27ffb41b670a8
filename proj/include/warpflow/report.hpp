#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "warpflow/diagnostics.hpp"

namespace warpflow {

nlohmann::json to_json(const DiagnosticsReport& report);
DiagnosticsReport report_from_json(const nlohmann::json& j);

DiagnosticsReport load_report(const std::string& path);
void save_report(const DiagnosticsReport& report, const std::string& path);

/// Columns t,E_u,E_v,E_beta_v,E_g,kinetic_cum,max_local_energy,dt with %.17g.
void write_series_csv(const DiagnosticsReport& report, std::ostream& os);

/// sup ||grad u||_2 + sup ||grad v||_4 + sum (|u_t|^2 + |Delta_h u|^2) dt.
double solution_norm(const DiagnosticsReport& report);

} // namespace warpflow

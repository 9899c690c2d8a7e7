#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

#include "fdot/inversion.hpp"
#include "fdot/measurement.hpp"
#include "fdot/types.hpp"

// File interchange. CSV is the single data format (17-significant-digit
// round-trip), JSON carries configs and reports.
//
// Measurement / TPSF CSV: header `pair_id,xs1,xs2,xd1,xd2,t_ps,value`.
// IRF CSV: header `t_ps,value` with the first bin at zero lag.

namespace fdot {

void write_measurement_csv(const std::string& path, const MeasurementSet& set);
MeasurementSet read_measurement_csv(const std::string& path);

void write_tpsf_csv(const std::string& path, const std::vector<TPSF>& tpsfs);

void write_irf_csv(const std::string& path, const IRF& irf);
IRF read_irf_csv(const std::string& path);

// Gated design implied by the entry order of a measurement set (entries of
// one pair are contiguous, times increasing).
MeasurementDesign design_from(const MeasurementSet& set);

// Per-holder intensity CSV: `holder,pair_id,mid_x1,mid_x2,intensity`.
void write_intensity_csv(const std::string& path, const IntensityTable& table,
                         const HolderLayout& layout);
IntensityTable read_intensity_csv(const std::string& path, const HolderLayout& layout);

struct AppConfig {
    OpticalMedium medium = OpticalMedium::make(0.219, 1.0, 0.01, 0.5493);
    Fluorophore fluor = Fluorophore::make(medium, 0.0, 1.0);
    HolderLayout layout;
    TimeGrid grid = TimeGrid::make(6.67, 6.67, 500);
    std::size_t window_before = 10, window_after = 9;
    LMSettings lm;
    StepSettings step;
    std::uint64_t seed = 1;
    double noise = 0.0;
    std::optional<TargetVariant> target;
    std::vector<std::pair<std::string, TargetVariant>> targets;  // labeled, for comparisons
    std::optional<std::array<double, 2>> init_xy;
    std::array<double, 3> init_rest{4.0, 4.0, 0.1};
    CuboidQuad cuboid_quad;
    VolumeQuad volume_quad;
    std::vector<SDPair> pairs;          // explicit pairs for diagnostics
    std::vector<double> times;          // explicit times / t ladder
    std::optional<std::array<double, 7>> reference;
    double no_target_fraction = 1e-6;
    std::optional<std::string> irf_path;  // detected-light pathway when set
};

AppConfig load_config(const std::string& path);

nlohmann::json lm_result_json(const LMResult& r);
nlohmann::json pipeline_report_json(const PipelineReport& rep, const AppConfig& cfg);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace fdot

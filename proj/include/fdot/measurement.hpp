#pragma once

#include <array>
#include <optional>
#include <variant>

#include "fdot/forward.hpp"
#include "fdot/sensitivity.hpp"
#include "fdot/types.hpp"

// Source-detector geometry (scanned holder), peak-centered time windows,
// synthetic measurement assembly and experimental-bundle ingestion.

namespace fdot {

// The scanned 4-fiber holder: two sources and two detectors at fixed offsets
// from each center. Offsets must be axis-aligned, sources on one axis and
// detectors on the other (both experiments in this geometry satisfy that).
struct HolderLayout {
    std::vector<BoundaryPoint> centers;
    std::array<BoundaryPoint, 2> source_offsets{BoundaryPoint{0.0, 10.0 * 1.7320508075688772},
                                                BoundaryPoint{0.0, -10.0 * 1.7320508075688772}};
    std::array<BoundaryPoint, 2> detector_offsets{BoundaryPoint{-10.0, 0.0},
                                                  BoundaryPoint{10.0, 0.0}};

    void validate() const;
    // 0 if sources sit on the x1 axis, 1 if on x2; detectors use the other.
    int source_axis() const;
};

// The four pairs at holder center i, ordered S1-D1, S1-D2, S2-D1, S2-D2,
// with ids like "P03S1D2" (1-based holder numbering).
std::array<SDPair, 4> holder_pairs(const HolderLayout& layout, std::size_t position_index);

struct TimeWindow {
    std::size_t first = 0;   // index of the first gate on the TPSF grid
    std::size_t peak = 0;    // argmax index
    std::vector<double> times;
};

// K = before + after + 1 grid times centered on the grid argmax. Errors if
// the window would clip the grid edge.
TimeWindow select_time_window(const TPSF& tpsf, std::size_t before = 10, std::size_t after = 9);

using TargetVariant = std::variant<CuboidTarget, CubeTarget, SphereTarget, EllipsoidTarget>;

// Per-holder emission intensities in holder_pairs order.
struct IntensityTable {
    std::vector<std::array<double, 4>> per_holder;
};

struct SimulatedMeasurements {
    MeasurementSet set;
    MeasurementDesign design;       // the gated (pair, times) layout of `set`
    IntensityTable intensities;     // full-record intensities per holder
};

// Forward TPSFs per pair on `grid`, peak-centered gating, stacked H, then
// multiplicative noise. Records delta and seed on the returned set.
SimulatedMeasurements simulate_measurements(const OpticalMedium& m, const Fluorophore& fluor,
                                            const TargetVariant& truth, const HolderLayout& layout,
                                            const TimeGrid& grid, double delta, std::uint64_t seed,
                                            std::size_t window_before = 10,
                                            std::size_t window_after = 9, VolumeQuad vol_quad = {},
                                            CuboidQuad cub_quad = {});

// Raw experimental records: counts per bin, one background record, measured
// IRF, lifetime and medium parameters from companion experiments.
struct ExperimentBundle {
    std::vector<TPSF> raw;            // one record per S-D pair, shared dt
    std::vector<double> background;   // counts per bin, same bin width
    IRF irf;
    double tau = 0.0;
    OpticalMedium medium;
    std::size_t window_before = 10, window_after = 9;
};

struct IngestedExperiment {
    MeasurementSet set;
    MeasurementDesign design;
    IRF irf;                          // passes through for q~ construction
    std::vector<TPSF> corrected;      // background-subtracted records
};

// Bin-wise background subtraction (negatives clamp to 0), peak-centered
// windows, measurement vector assembly.
IngestedExperiment ingest_experiment(const ExperimentBundle& bundle);

}  // namespace fdot

#include "fdot/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fdot/parallel.hpp"

namespace fdot {

namespace {

int axis_of(const BoundaryPoint& offset) {
    const bool on1 = offset.x1 != 0.0, on2 = offset.x2 != 0.0;
    if (on1 == on2) return -1;
    return on1 ? 0 : 1;
}

std::string pair_id(std::size_t holder, std::size_t si, std::size_t di) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%02zuS%zuD%zu", holder + 1, si + 1, di + 1);
    return buf;
}

}  // namespace

void HolderLayout::validate() const {
    if (centers.empty()) throw std::invalid_argument("HolderLayout: need at least one center");
    const int sa0 = axis_of(source_offsets[0]), sa1 = axis_of(source_offsets[1]);
    const int da0 = axis_of(detector_offsets[0]), da1 = axis_of(detector_offsets[1]);
    if (sa0 < 0 || sa0 != sa1 || da0 < 0 || da0 != da1 || sa0 == da0)
        throw std::invalid_argument(
            "HolderLayout: source and detector offsets must be axis-aligned on orthogonal axes");
}

int HolderLayout::source_axis() const { return axis_of(source_offsets[0]); }

std::array<SDPair, 4> holder_pairs(const HolderLayout& layout, std::size_t position_index) {
    layout.validate();
    if (position_index >= layout.centers.size())
        throw std::out_of_range("holder_pairs: position index out of range");
    const BoundaryPoint c = layout.centers[position_index];
    std::array<SDPair, 4> out;
    std::size_t k = 0;
    for (std::size_t si = 0; si < 2; ++si) {
        for (std::size_t di = 0; di < 2; ++di) {
            SDPair p;
            p.source = {c.x1 + layout.source_offsets[si].x1, c.x2 + layout.source_offsets[si].x2};
            p.detector = {c.x1 + layout.detector_offsets[di].x1,
                          c.x2 + layout.detector_offsets[di].x2};
            p.id = pair_id(position_index, si, di);
            out[k++] = p;
        }
    }
    return out;
}

TimeWindow select_time_window(const TPSF& tpsf, std::size_t before, std::size_t after) {
    const std::size_t n = tpsf.values.size();
    if (n < before + after + 1)
        throw std::invalid_argument("select_time_window: record shorter than the window");
    const std::size_t peak = static_cast<std::size_t>(
        std::max_element(tpsf.values.begin(), tpsf.values.end()) - tpsf.values.begin());
    if (peak < before || peak + after >= n)
        throw std::invalid_argument("select_time_window: peak too close to the grid edge");
    TimeWindow w;
    w.first = peak - before;
    w.peak = peak;
    w.times.reserve(before + after + 1);
    for (std::size_t i = w.first; i <= peak + after; ++i) w.times.push_back(tpsf.grid.time(i));
    return w;
}

namespace {

struct PairEvaluator {
    const OpticalMedium& m;
    double c_f;
    const TargetVariant& truth;
    VolumeQuad vol;
    CuboidQuad cub;

    double operator()(const SDPair& pair, double t, bool coarse) const {
        VolumeQuad vq = vol;
        if (coarse) {  // peak location only needs a rough amplitude profile
            vq.s = std::max<std::size_t>(8, vol.s / 2);
            vq.r = std::max<std::size_t>(4, vol.r / 2);
            vq.phi = std::max<std::size_t>(4, vol.phi / 2);
            vq.theta = std::max<std::size_t>(8, vol.theta / 2);
        }
        return std::visit(
            [&](const auto& tgt) -> double {
                using T = std::decay_t<decltype(tgt)>;
                if constexpr (std::is_same_v<T, CuboidTarget>)
                    return cuboid_value(m, c_f, tgt, pair, t, cub);
                else if constexpr (std::is_same_v<T, CubeTarget>)
                    return cuboid_value(m, c_f, tgt.to_cuboid(), pair, t, cub);
                else if constexpr (std::is_same_v<T, SphereTarget>)
                    return sphere_value(m, c_f, tgt, pair, t, coarse ? vq : vol);
                else
                    return ellipsoid_value(m, c_f, tgt, pair, t, coarse ? vq : vol);
            },
            truth);
    }
};

}  // namespace

SimulatedMeasurements simulate_measurements(const OpticalMedium& m, const Fluorophore& fluor,
                                            const TargetVariant& truth, const HolderLayout& layout,
                                            const TimeGrid& grid, double delta, std::uint64_t seed,
                                            std::size_t window_before, std::size_t window_after,
                                            VolumeQuad vol_quad, CuboidQuad cub_quad) {
    layout.validate();
    if (!(grid.t0 >= grid.dt))
        throw std::invalid_argument("simulate_measurements: model grid needs t0 >= dt");
    if (fluor.tau != 0.0)
        throw std::invalid_argument("simulate_measurements: synthetic data uses the zero-lifetime model");
    PairEvaluator eval{m, fluor.c_f, truth, vol_quad, cub_quad};

    std::vector<SDPair> pairs;
    for (std::size_t h = 0; h < layout.centers.size(); ++h)
        for (const auto& p : holder_pairs(layout, h)) pairs.push_back(p);

    struct PairResult {
        std::vector<double> gate_times, gate_values;
        double intensity = 0.0;
    };
    std::vector<PairResult> results(pairs.size());

    parallel_for(pairs.size(), [&](std::size_t pi) {
        const SDPair& pair = pairs[pi];
        // coarse scan (stride 8, reduced orders) for the argmax neighborhood,
        // exact refinement around it, gates evaluated at full order
        const std::size_t stride = 8;
        std::size_t ic = 0;
        double best = -1.0;
        std::vector<double> coarse((grid.n + stride - 1) / stride);
        for (std::size_t i = 0; i < grid.n; i += stride) {
            const double v = eval(pair, grid.time(i), true);
            coarse[i / stride] = v;
            if (v > best) {
                best = v;
                ic = i;
            }
        }
        const std::size_t lo = ic > 12 ? ic - 12 : 0;
        const std::size_t hi = std::min(grid.n - 1, ic + 12);
        std::size_t peak = lo;
        double vpeak = -1.0;
        std::vector<double> fine(hi - lo + 1);
        for (std::size_t i = lo; i <= hi; ++i) {
            fine[i - lo] = eval(pair, grid.time(i), false);
            if (fine[i - lo] > vpeak) {
                vpeak = fine[i - lo];
                peak = i;
            }
        }
        if (peak < window_before || peak + window_after >= grid.n)
            throw std::invalid_argument("simulate_measurements: gate window would clip the grid");
        auto& res = results[pi];
        for (std::size_t i = peak - window_before; i <= peak + window_after; ++i) {
            const double v = (i >= lo && i <= hi) ? fine[i - lo] : eval(pair, grid.time(i), false);
            res.gate_times.push_back(grid.time(i));
            res.gate_values.push_back(v);
        }
        // full-record intensity from the coarse profile (trapezoid, stride*dt)
        double acc = 0.5 * (coarse.front() + coarse.back());
        for (std::size_t i = 1; i + 1 < coarse.size(); ++i) acc += coarse[i];
        res.intensity = acc * grid.dt * static_cast<double>(stride);
    });

    SimulatedMeasurements out;
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        MeasurementDesign::Row row{pairs[pi], results[pi].gate_times};
        out.design.rows.push_back(row);
        for (std::size_t k = 0; k < results[pi].gate_times.size(); ++k)
            out.set.entries.push_back({pairs[pi], results[pi].gate_times[k],
                                       results[pi].gate_values[k]});
    }
    out.intensities.per_holder.resize(layout.centers.size());
    for (std::size_t h = 0; h < layout.centers.size(); ++h)
        for (std::size_t k = 0; k < 4; ++k)
            out.intensities.per_holder[h][k] = results[4 * h + k].intensity;
    out.set.delta = 0.0;
    if (delta > 0.0) out.set = add_noise(out.set, delta, seed);
    return out;
}

IngestedExperiment ingest_experiment(const ExperimentBundle& bundle) {
    if (bundle.raw.empty()) throw std::invalid_argument("ingest_experiment: no records");
    const double dt = bundle.raw.front().grid.dt;
    for (const auto& r : bundle.raw) {
        if (std::abs(r.grid.dt - dt) > 1e-12 * dt)
            throw std::invalid_argument("ingest_experiment: records disagree on bin width");
        if (r.values.empty()) throw std::invalid_argument("ingest_experiment: empty record");
    }
    if (std::abs(bundle.irf.grid.dt - dt) > 1e-12 * dt)
        throw std::invalid_argument("ingest_experiment: IRF bin width mismatch");

    IngestedExperiment out;
    out.irf = bundle.irf;
    for (const auto& r : bundle.raw) {
        TPSF corr = r;
        for (std::size_t i = 0; i < corr.values.size(); ++i) {
            const double bg = i < bundle.background.size() ? bundle.background[i] : 0.0;
            corr.values[i] = std::max(0.0, corr.values[i] - bg);
        }
        const TimeWindow w = select_time_window(corr, bundle.window_before, bundle.window_after);
        MeasurementDesign::Row row{corr.pair, w.times};
        out.design.rows.push_back(row);
        for (std::size_t k = 0; k < w.times.size(); ++k)
            out.set.entries.push_back({corr.pair, w.times[k], corr.values[w.first + k]});
        out.corrected.push_back(std::move(corr));
    }
    return out;
}

}  // namespace fdot

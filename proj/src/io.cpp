#include "fdot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace fdot {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(path + ": bad numeric field at row " + std::to_string(lineno));
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::invalid_argument("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open for reading: " + path);
    return f;
}

void write_rows(std::ofstream& f, const MeasurementSet& set) {
    f << "pair_id,xs1,xs2,xd1,xd2,t_ps,value\n";
    for (const auto& e : set.entries) {
        f << e.pair.id << ',' << fmt17(e.pair.source.x1) << ',' << fmt17(e.pair.source.x2) << ','
          << fmt17(e.pair.detector.x1) << ',' << fmt17(e.pair.detector.x2) << ','
          << fmt17(e.t) << ',' << fmt17(e.value) << '\n';
    }
}

}  // namespace

void write_measurement_csv(const std::string& path, const MeasurementSet& set) {
    auto f = open_out(path);
    write_rows(f, set);
}

MeasurementSet read_measurement_csv(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("pair_id,", 0) != 0)
        throw std::invalid_argument(path + ": missing measurement CSV header at row 1");
    MeasurementSet set;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 7)
            throw std::invalid_argument(path + ": expected 7 fields at row " + std::to_string(lineno));
        MeasurementSet::Entry e;
        e.pair.id = fields[0];
        e.pair.source.x1 = parse_double(fields[1], path, lineno);
        e.pair.source.x2 = parse_double(fields[2], path, lineno);
        e.pair.detector.x1 = parse_double(fields[3], path, lineno);
        e.pair.detector.x2 = parse_double(fields[4], path, lineno);
        e.t = parse_double(fields[5], path, lineno);
        e.value = parse_double(fields[6], path, lineno);
        set.entries.push_back(std::move(e));
    }
    return set;
}

void write_tpsf_csv(const std::string& path, const std::vector<TPSF>& tpsfs) {
    MeasurementSet set;
    for (const auto& t : tpsfs)
        for (std::size_t i = 0; i < t.values.size(); ++i)
            set.entries.push_back({t.pair, t.grid.time(i), t.values[i]});
    write_measurement_csv(path, set);
}

void write_irf_csv(const std::string& path, const IRF& irf) {
    auto f = open_out(path);
    f << "t_ps,value\n";
    for (std::size_t i = 0; i < irf.values.size(); ++i)
        f << fmt17(irf.grid.time(i)) << ',' << fmt17(irf.values[i]) << '\n';
}

IRF read_irf_csv(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("t_ps,", 0) != 0)
        throw std::invalid_argument(path + ": missing IRF CSV header at row 1");
    std::vector<double> times, values;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::invalid_argument(path + ": expected 2 fields at row " + std::to_string(lineno));
        times.push_back(parse_double(fields[0], path, lineno));
        values.push_back(parse_double(fields[1], path, lineno));
    }
    if (times.size() < 2) throw std::invalid_argument(path + ": IRF needs at least 2 bins");
    const double dt = times[1] - times[0];
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - times[i - 1] - dt) > 1e-9 * dt)
            throw std::invalid_argument(path + ": IRF grid is not uniform at row " +
                                        std::to_string(i + 2));
    IRF irf{TimeGrid::make(times[0], dt, times.size()), std::move(values)};
    irf.validate();
    return irf;
}

MeasurementDesign design_from(const MeasurementSet& set) {
    MeasurementDesign d;
    for (const auto& e : set.entries) {
        if (d.rows.empty() || d.rows.back().pair.id != e.pair.id)
            d.rows.push_back({e.pair, {}});
        d.rows.back().times.push_back(e.t);
    }
    d.validate();
    return d;
}

void write_intensity_csv(const std::string& path, const IntensityTable& table,
                         const HolderLayout& layout) {
    auto f = open_out(path);
    f << "holder,pair_id,mid_x1,mid_x2,intensity\n";
    for (std::size_t h = 0; h < table.per_holder.size(); ++h) {
        const auto pairs = holder_pairs(layout, h);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& p = pairs[k];
            f << (h + 1) << ',' << p.id << ',' << fmt17(0.5 * (p.source.x1 + p.detector.x1)) << ','
              << fmt17(0.5 * (p.source.x2 + p.detector.x2)) << ','
              << fmt17(table.per_holder[h][k]) << '\n';
        }
    }
}

IntensityTable read_intensity_csv(const std::string& path, const HolderLayout& layout) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("holder,", 0) != 0)
        throw std::invalid_argument(path + ": missing intensity CSV header at row 1");
    IntensityTable t;
    t.per_holder.assign(layout.centers.size(), {0.0, 0.0, 0.0, 0.0});
    std::vector<std::size_t> seen(layout.centers.size(), 0);
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw std::invalid_argument(path + ": expected 5 fields at row " + std::to_string(lineno));
        const auto h = static_cast<std::size_t>(parse_double(fields[0], path, lineno)) - 1;
        if (h >= layout.centers.size())
            throw std::invalid_argument(path + ": holder index out of range at row " +
                                        std::to_string(lineno));
        if (seen[h] >= 4)
            throw std::invalid_argument(path + ": more than 4 pairs for holder at row " +
                                        std::to_string(lineno));
        t.per_holder[h][seen[h]++] = parse_double(fields[4], path, lineno);
    }
    for (std::size_t h = 0; h < seen.size(); ++h)
        if (seen[h] != 4)
            throw std::invalid_argument(path + ": holder " + std::to_string(h + 1) +
                                        " does not carry 4 pairs");
    return t;
}

namespace {

BoundaryPoint parse_point(const json& j) { return BoundaryPoint{j.at(0), j.at(1)}; }

TargetVariant parse_target(const json& j) {
    const std::string type = j.at("type");
    if (type == "cuboid") {
        const auto& e = j.at("extents");  // [a1,b1,a2,b2,a3,b3]
        CuboidTarget t{e.at(0), e.at(1), e.at(2), e.at(3), e.at(4), e.at(5), j.at("P")};
        t.validate();
        return t;
    }
    if (type == "cube") {
        const auto& c = j.at("center");
        CubeTarget t{c.at(0), c.at(1), c.at(2), j.at("L"), j.at("Q")};
        t.validate();
        return t;
    }
    if (type == "sphere") {
        const auto& c = j.at("center");
        SphereTarget t{{c.at(0), c.at(1), c.at(2)}, j.at("radius"), j.at("P")};
        t.validate();
        return t;
    }
    if (type == "ellipsoid") {
        const auto& c = j.at("center");
        const auto& ax = j.at("semi_axes");
        EllipsoidTarget t{{c.at(0), c.at(1), c.at(2)}, ax.at(0), ax.at(1), ax.at(2), j.at("P")};
        t.validate();
        return t;
    }
    throw std::invalid_argument("config: unknown target type '" + type + "'");
}

}  // namespace

AppConfig load_config(const std::string& path) {
    auto f = open_in(path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::invalid_argument(path + ": JSON parse error: " + e.what());
    }
    AppConfig cfg;
    try {
        if (j.contains("medium")) {
            const auto& m = j["medium"];
            cfg.medium = OpticalMedium::make(m.at("c"), m.at("mu_s_prime"), m.at("mu_a"),
                                             m.at("beta"));
        }
        double tau = 0.0, gamma = 1.0;
        if (j.contains("fluorophore")) {
            tau = j["fluorophore"].value("tau", 0.0);
            gamma = j["fluorophore"].value("gamma", 1.0);
        }
        cfg.fluor = Fluorophore::make(cfg.medium, tau, gamma);
        if (j.contains("layout")) {
            const auto& l = j["layout"];
            cfg.layout.centers.clear();
            for (const auto& c : l.at("centers")) cfg.layout.centers.push_back(parse_point(c));
            if (l.contains("source_offsets")) {
                cfg.layout.source_offsets[0] = parse_point(l["source_offsets"].at(0));
                cfg.layout.source_offsets[1] = parse_point(l["source_offsets"].at(1));
            }
            if (l.contains("detector_offsets")) {
                cfg.layout.detector_offsets[0] = parse_point(l["detector_offsets"].at(0));
                cfg.layout.detector_offsets[1] = parse_point(l["detector_offsets"].at(1));
            }
        }
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            cfg.grid = TimeGrid::make(g.at("t0"), g.at("dt"), g.at("n"));
        }
        if (j.contains("window")) {
            cfg.window_before = j["window"].value("before", 10);
            cfg.window_after = j["window"].value("after", 9);
        }
        if (j.contains("lm")) {
            const auto& l = j["lm"];
            cfg.lm.max_iter = l.value("max_iter", 800);
            cfg.lm.min_step = l.value("min_step", 1e-20);
            cfg.lm.min_residual_reduction = l.value("min_residual_reduction", 1e-6);
            cfg.lm.c1 = l.value("c1", 0.8);
            cfg.lm.lambda = l.value("lambda", 1.5);
            cfg.lm.nu = l.value("nu", 10.0);
            const std::string mode = l.value("mode", "B");
            if (mode == "A")
                cfg.lm.damping = LMSettings::Damping::AlphaRule;
            else if (mode == "B")
                cfg.lm.damping = LMSettings::Damping::Multiplicative;
            else
                throw std::invalid_argument("config: lm.mode must be \"A\" or \"B\"");
            cfg.lm.validate();
        }
        cfg.step.lm = cfg.lm;
        if (j.contains("step_bounds")) {
            const auto& s = j["step_bounds"];
            cfg.step.x3_hi = s.value("x3_hi", 50.0);
            cfg.step.side_cap = s.value("side_cap", 40.0);
            cfg.step.strength_hi = s.value("strength_hi", 1e9);
            cfg.step.lateral_bound = s.value("lateral_bound", 100.0);
            cfg.step.depth_hi = s.value("depth_hi", 100.0);
        }
        cfg.seed = j.value("seed", 1);
        cfg.noise = j.value("noise", 0.0);
        if (j.contains("target")) cfg.target = parse_target(j["target"]);
        if (j.contains("targets"))
            for (const auto& t : j["targets"])
                cfg.targets.emplace_back(t.at("label"), parse_target(t));
        if (j.contains("init")) {
            const auto& in = j["init"];
            if (in.contains("xy")) cfg.init_xy = {{in["xy"].at(0), in["xy"].at(1)}};
            if (in.contains("rest"))
                cfg.init_rest = {in["rest"].at(0), in["rest"].at(1), in["rest"].at(2)};
        }
        if (j.contains("quadrature")) {
            const auto& q = j["quadrature"];
            cfg.cuboid_quad.outer = q.value("outer", 64);
            cfg.cuboid_quad.depth = q.value("depth", 32);
            cfg.volume_quad.s = q.value("s", 48);
            cfg.volume_quad.r = q.value("r", 16);
            cfg.volume_quad.phi = q.value("phi", 16);
            cfg.volume_quad.theta = q.value("theta", 32);
        }
        if (j.contains("pairs")) {
            for (const auto& p : j["pairs"]) {
                SDPair sp{parse_point(p.at("source")), parse_point(p.at("detector")),
                          p.value("id", std::string())};
                sp.validate();
                cfg.pairs.push_back(std::move(sp));
            }
        }
        if (j.contains("times")) for (const auto& t : j["times"]) cfg.times.push_back(t);
        if (j.contains("reference")) {
            std::array<double, 7> ref{};
            for (int i = 0; i < 7; ++i) ref[static_cast<std::size_t>(i)] = j["reference"].at(i);
            cfg.reference = ref;
        }
        cfg.no_target_fraction = j.value("no_target_fraction", 1e-6);
        if (j.contains("irf")) cfg.irf_path = j["irf"].at("path").get<std::string>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": config error: " + e.what());
    }
    return cfg;
}

json lm_result_json(const LMResult& r) {
    json j;
    j["params"] = std::vector<double>(r.params.data(), r.params.data() + r.params.size());
    j["err"] = r.err;
    j["accepted_steps"] = r.accepted;
    j["iterations"] = r.iterations;
    j["model_evaluations"] = r.n_evals;
    j["stop_reason"] = r.stop_reason;
    j["seconds"] = r.seconds;
    j["residual_history"] = r.residual_history;
    return j;
}

json pipeline_report_json(const PipelineReport& rep, const AppConfig& cfg) {
    json j;
    j["gamma"] = {{"x1", {rep.gamma.x1_lo, rep.gamma.x1_hi}},
                  {"x2", {rep.gamma.x2_lo, rep.gamma.x2_hi}}};
    j["step2"] = lm_result_json(rep.step2.lm);
    j["step2"]["cube"] = {rep.step2.cube.X1, rep.step2.cube.X2, rep.step2.cube.X3,
                          rep.step2.cube.L, rep.step2.cube.Q};
    j["no_target"] = rep.no_target;
    if (!rep.no_target) {
        j["step3"] = lm_result_json(rep.step3.lm);
        j["step3"]["cuboid"] = {rep.step3.cuboid.a1, rep.step3.cuboid.b1, rep.step3.cuboid.a2,
                                rep.step3.cuboid.b2, rep.step3.cuboid.a3, rep.step3.cuboid.b3,
                                rep.step3.cuboid.P};
    }
    j["err"] = rep.err;
    if (rep.Err) j["Err"] = *rep.Err;
    j["seconds"] = rep.seconds;
    j["config_echo"] = {{"seed", cfg.seed},
                        {"noise", cfg.noise},
                        {"lm_mode", cfg.lm.damping == LMSettings::Damping::AlphaRule ? "A" : "B"}};
    return j;
}

void write_json(const std::string& path, const json& j) {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

}  // namespace fdot

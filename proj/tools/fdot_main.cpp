// fdot command-line interface: forward TPSF generation, synthetic
// measurement simulation, three-step inversion, sensitivity/asymptotics
// diagnostics, and holder intensity maps.
//
// Exit codes: 0 ok, 2 input/config error, 3 numeric failure,
// 4 non-convergence (LM stopped only by the iteration cap).

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <nlohmann/json.hpp>

#include "fdot/io.hpp"
#include "fdot/parallel.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
    std::string config, out, data, intensities;
    double noise = -1.0;   // <0: keep config value
    long long seed = -1;   // <0: keep config value
    std::string mode;      // "", "A", "B"
    int threads = 0;
};

void apply_overrides(fdot::AppConfig& cfg, const CommonOpts& o) {
    if (o.noise >= 0.0) cfg.noise = o.noise;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.mode == "A") cfg.lm.damping = fdot::LMSettings::Damping::AlphaRule;
    if (o.mode == "B") cfg.lm.damping = fdot::LMSettings::Damping::Multiplicative;
    cfg.step.lm = cfg.lm;
    if (o.threads > 0) fdot::set_max_threads(static_cast<unsigned>(o.threads));
}

std::vector<fdot::SDPair> all_pairs(const fdot::AppConfig& cfg) {
    std::vector<fdot::SDPair> pairs = cfg.pairs;
    if (!cfg.layout.centers.empty())
        for (std::size_t h = 0; h < cfg.layout.centers.size(); ++h)
            for (const auto& p : fdot::holder_pairs(cfg.layout, h)) pairs.push_back(p);
    if (pairs.empty()) throw std::invalid_argument("config: no pairs (layout or pairs[] required)");
    return pairs;
}

fdot::TPSF forward_tpsf(const fdot::AppConfig& cfg, const fdot::TargetVariant& target,
                        const fdot::SDPair& pair) {
    return std::visit(
        [&](const auto& tgt) -> fdot::TPSF {
            using T = std::decay_t<decltype(tgt)>;
            if constexpr (std::is_same_v<T, fdot::CuboidTarget>)
                return fdot::cuboid_tpsf(cfg.medium, cfg.fluor, tgt, pair, cfg.grid,
                                         cfg.cuboid_quad);
            else if constexpr (std::is_same_v<T, fdot::CubeTarget>)
                return fdot::cuboid_tpsf(cfg.medium, cfg.fluor, tgt.to_cuboid(), pair, cfg.grid,
                                         cfg.cuboid_quad);
            else if constexpr (std::is_same_v<T, fdot::SphereTarget>)
                return fdot::sphere_tpsf(cfg.medium, cfg.fluor, tgt, pair, cfg.grid,
                                         cfg.volume_quad);
            else
                return fdot::ellipsoid_tpsf(cfg.medium, cfg.fluor, tgt, pair, cfg.grid,
                                            cfg.volume_quad);
        },
        target);
}

int cmd_forward(const CommonOpts& o) {
    auto cfg = fdot::load_config(o.config);
    apply_overrides(cfg, o);
    std::vector<std::pair<std::string, fdot::TargetVariant>> targets = cfg.targets;
    if (targets.empty()) {
        if (!cfg.target) throw std::invalid_argument("config: forward needs target or targets[]");
        targets.emplace_back("", *cfg.target);
    }
    const auto pairs = all_pairs(cfg);
    for (const auto& [label, target] : targets) {
        std::vector<fdot::TPSF> tpsfs;
        tpsfs.reserve(pairs.size());
        for (const auto& p : pairs) tpsfs.push_back(forward_tpsf(cfg, target, p));
        std::string path = o.out;
        if (!label.empty()) {
            const auto dot = path.rfind('.');
            path = dot == std::string::npos ? path + "-" + label
                                            : path.substr(0, dot) + "-" + label + path.substr(dot);
        }
        fdot::write_tpsf_csv(path, tpsfs);
        std::cout << "forward: wrote " << tpsfs.size() << " TPSFs to " << path << "\n";
    }
    return 0;
}

int cmd_simulate(const CommonOpts& o) {
    auto cfg = fdot::load_config(o.config);
    apply_overrides(cfg, o);
    if (!cfg.target) throw std::invalid_argument("config: simulate needs a target");
    if (cfg.layout.centers.empty()) throw std::invalid_argument("config: simulate needs a layout");
    const auto sim = fdot::simulate_measurements(cfg.medium, cfg.fluor, *cfg.target, cfg.layout,
                                                 cfg.grid, cfg.noise, cfg.seed, cfg.window_before,
                                                 cfg.window_after, cfg.volume_quad, cfg.cuboid_quad);
    fdot::write_measurement_csv(o.out, sim.set);
    std::cout << "simulate: " << sim.set.entries.size() << " entries (delta=" << cfg.noise
              << ", seed=" << cfg.seed << ") -> " << o.out << "\n";
    if (!o.intensities.empty()) {
        fdot::write_intensity_csv(o.intensities, sim.intensities, cfg.layout);
        std::cout << "simulate: intensities -> " << o.intensities << "\n";
    }
    return 0;
}

// Gate-sum fallback when no full-record intensity table accompanies the data.
fdot::IntensityTable gate_sum_intensities(const fdot::MeasurementSet& set,
                                          const fdot::HolderLayout& layout) {
    fdot::IntensityTable table;
    table.per_holder.assign(layout.centers.size(), {0.0, 0.0, 0.0, 0.0});
    for (std::size_t h = 0; h < layout.centers.size(); ++h) {
        const auto pairs = fdot::holder_pairs(layout, h);
        for (std::size_t k = 0; k < 4; ++k)
            for (const auto& e : set.entries)
                if (e.pair.id == pairs[k].id) table.per_holder[h][k] += e.value;
    }
    return table;
}

int cmd_invert(const CommonOpts& o) {
    auto cfg = fdot::load_config(o.config);
    apply_overrides(cfg, o);
    if (cfg.layout.centers.empty()) throw std::invalid_argument("config: invert needs a layout");
    fdot::PipelineInput input;
    input.data = fdot::read_measurement_csv(o.data);
    if (input.data.entries.empty()) throw std::invalid_argument(o.data + ": no measurement rows");
    if (cfg.noise > 0.0) input.data.delta = cfg.noise;
    input.design = fdot::design_from(input.data);
    input.layout = cfg.layout;
    input.intensities = o.intensities.empty()
        ? gate_sum_intensities(input.data, cfg.layout)
        : fdot::read_intensity_csv(o.intensities, cfg.layout);
    if (cfg.irf_path) {
        const fdot::IRF q = fdot::read_irf_csv(*cfg.irf_path);
        input.qtilde = fdot::irf_with_lifetime(q, cfg.fluor.tau);
        input.conv_grid = cfg.grid;
    }
    fdot::PipelineConfig pc{cfg.medium, cfg.fluor, cfg.step, cfg.init_xy, cfg.init_rest,
                            cfg.no_target_fraction, cfg.cuboid_quad, cfg.reference};
    const auto rep = fdot::run_pipeline(pc, input);
    fdot::write_json(o.out, fdot::pipeline_report_json(rep, cfg));
    if (rep.no_target) {
        std::cout << "invert: no target detected (fitted strength below threshold), err=" << rep.err
                  << "\n";
        return 0;
    }
    const auto& c = rep.step3.cuboid;
    std::printf("invert: cuboid=(%.4g, %.4g, %.4g, %.4g, %.4g, %.4g, %.4g) err=%.3g\n", c.a1, c.b1,
                c.a2, c.b2, c.a3, c.b3, c.P, rep.err);
    const bool unconverged = rep.step3.lm.stop_reason == "max_iter" ||
                             rep.step2.lm.stop_reason == "max_iter";
    return unconverged ? 4 : 0;
}

int cmd_sensitivity(const CommonOpts& o) {
    auto cfg = fdot::load_config(o.config);
    apply_overrides(cfg, o);
    if (!cfg.target || !std::holds_alternative<fdot::CuboidTarget>(*cfg.target))
        throw std::invalid_argument("config: sensitivity needs a cuboid target");
    if (cfg.pairs.empty()) throw std::invalid_argument("config: sensitivity needs pairs[]");
    if (cfg.times.empty()) throw std::invalid_argument("config: sensitivity needs times[]");
    const auto& target = std::get<fdot::CuboidTarget>(*cfg.target);
    fdot::MeasurementDesign design;
    for (const auto& p : cfg.pairs) design.rows.push_back({p, cfg.times});
    const Eigen::MatrixXd J =
        fdot::sensitivity_matrix(cfg.medium, cfg.fluor, target, design, cfg.cuboid_quad);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    json rep;
    rep["rows"] = J.rows();
    rep["singular_values"] =
        std::vector<double>(svd.singularValues().data(),
                            svd.singularValues().data() + svd.singularValues().size());
    rep["rank"] = fdot::numerical_rank(J);
    std::vector<double> col_norms;
    for (int c = 0; c < 7; ++c) col_norms.push_back(J.col(c).norm());
    rep["column_norms"] = col_norms;
    if (cfg.pairs.size() == 7 || cfg.pairs.size() == 5) {
        std::vector<int> subset = cfg.pairs.size() == 7 ? std::vector<int>{0, 1, 2, 3, 4, 5, 6}
                                                        : std::vector<int>{0, 1, 2, 3, 6};
        json dets = json::array();
        for (double t : cfg.times) {
            const auto det = fdot::determinant_condition(cfg.medium, cfg.fluor, target, cfg.pairs,
                                                         t, subset, cfg.cuboid_quad);
            dets.push_back({{"t", t},
                            {"sign", det.sign},
                            {"log_abs", det.log_abs},
                            {"normalized", det.normalized}});
        }
        rep["determinant_condition"] = dets;
    }
    fdot::write_json(o.out, rep);
    std::cout << "sensitivity: rank " << rep["rank"] << " over " << J.rows() << " rows -> " << o.out
              << "\n";
    return 0;
}

int cmd_asymptotics(const CommonOpts& o) {
    auto cfg = fdot::load_config(o.config);
    apply_overrides(cfg, o);
    if (!cfg.target || !std::holds_alternative<fdot::CuboidTarget>(*cfg.target))
        throw std::invalid_argument("config: asymptotics needs a cuboid target");
    if (cfg.pairs.empty()) throw std::invalid_argument("config: asymptotics needs pairs[]");
    const auto& target = std::get<fdot::CuboidTarget>(*cfg.target);
    std::vector<double> ladder = cfg.times.empty() ? std::vector<double>{20.0, 10.0, 5.0}
                                                   : cfg.times;
    json rep;
    json per_pair = json::array();
    for (const auto& pair : cfg.pairs) {
        json rows = json::array();
        for (double t : ladder) {
            const auto ana = fdot::cuboid_gradient(cfg.medium, cfg.fluor, target, pair, t,
                                                   cfg.cuboid_quad);
            const auto asy = fdot::asymptotic_gradient(cfg.medium, cfg.fluor, target, pair, t);
            json row;
            row["t"] = t;
            row["analytic"] = ana;
            row["dominant"] = asy;
            std::array<double, 7> ratio{};
            for (std::size_t i = 0; i < 7; ++i)
                ratio[i] = asy[i] != 0.0 ? ana[i] / asy[i] : 0.0;
            row["ratio"] = ratio;
            rows.push_back(row);
        }
        per_pair.push_back({{"pair", pair.id}, {"ladder", rows}});
    }
    rep["pairs"] = per_pair;
    // pairwise parallelism of the (a3, b3, P) dominant columns across pairs
    if (cfg.pairs.size() >= 2) {
        const double t = ladder.back();
        std::array<std::vector<double>, 3> cols;
        for (const auto& pair : cfg.pairs) {
            const auto g = fdot::asymptotic_gradient(cfg.medium, cfg.fluor, target, pair, t);
            cols[0].push_back(g[4]);
            cols[1].push_back(g[5]);
            cols[2].push_back(g[6]);
        }
        auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
            double num = 0, na = 0, nb = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                num += a[i] * b[i];
                na += a[i] * a[i];
                nb += b[i] * b[i];
            }
            return std::abs(num) / std::sqrt(na * nb);
        };
        rep["parallelism_cosines"] = {cosine(cols[0], cols[1]), cosine(cols[0], cols[2]),
                                      cosine(cols[1], cols[2])};
    }
    fdot::write_json(o.out, rep);
    std::cout << "asymptotics: " << cfg.pairs.size() << " pairs over " << ladder.size()
              << " times -> " << o.out << "\n";
    return 0;
}

int cmd_intensity_map(const CommonOpts& o) {
    auto cfg = fdot::load_config(o.config);
    apply_overrides(cfg, o);
    if (!cfg.target) throw std::invalid_argument("config: intensity-map needs a target");
    if (cfg.layout.centers.empty())
        throw std::invalid_argument("config: intensity-map needs a layout");
    fdot::IntensityTable table;
    table.per_holder.resize(cfg.layout.centers.size());
    for (std::size_t h = 0; h < cfg.layout.centers.size(); ++h) {
        const auto pairs = fdot::holder_pairs(cfg.layout, h);
        for (std::size_t k = 0; k < 4; ++k) {
            const fdot::TPSF tpsf = forward_tpsf(cfg, *cfg.target, pairs[k]);
            table.per_holder[h][k] = fdot::emission_intensity(tpsf);
        }
    }
    fdot::write_intensity_csv(o.out, table, cfg.layout);
    std::cout << "intensity-map: " << cfg.layout.centers.size() << " holder positions -> " << o.out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fdot: time-domain fluorescence diffuse optical tomography in a half space"};
    app.require_subcommand(1);
    CommonOpts o;

    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", o.config, "config JSON path")->required();
        if (needs_out) sub->add_option("--out", o.out, "output path")->required();
        sub->add_option("--noise", o.noise, "relative noise level override");
        sub->add_option("--seed", o.seed, "RNG seed override");
        sub->add_option("--mode", o.mode, "LM damping mode override")
            ->check(CLI::IsMember({"A", "B"}));
        sub->add_option("--threads", o.threads, "worker thread cap");
    };

    auto* fwd = app.add_subcommand("forward", "write model TPSF CSVs for the configured pairs");
    add_common(fwd, true);
    auto* sim = app.add_subcommand("simulate", "synthesize gated measurement data");
    add_common(sim, true);
    sim->add_option("--intensities", o.intensities, "also write a per-pair intensity CSV");
    auto* inv = app.add_subcommand("invert", "run the three-step inversion on measurement data");
    add_common(inv, true);
    inv->add_option("--data", o.data, "measurement CSV path")->required();
    inv->add_option("--intensities", o.intensities, "per-pair intensity CSV (else gate sums)");
    auto* sen = app.add_subcommand("sensitivity", "rank / singular value / determinant report");
    add_common(sen, true);
    auto* asy = app.add_subcommand("asymptotics", "dominant-term ratio ladder report");
    add_common(asy, true);
    auto* imap = app.add_subcommand("intensity-map", "per-holder emission intensity scan");
    add_common(imap, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(fwd)) return cmd_forward(o);
        if (app.got_subcommand(sim)) return cmd_simulate(o);
        if (app.got_subcommand(inv)) return cmd_invert(o);
        if (app.got_subcommand(sen)) return cmd_sensitivity(o);
        if (app.got_subcommand(asy)) return cmd_asymptotics(o);
        if (app.got_subcommand(imap)) return cmd_intensity_map(o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error (input/config): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error (numeric): " << e.what() << "\n";
        return 3;
    }
    return 2;
}

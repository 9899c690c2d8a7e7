// Python bindings for the fdot core: optics kernels, forward models,
// analytic Jacobians, diagnostics and the three-step inversion pipeline.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdot/inversion.hpp"
#include "fdot/io.hpp"
#include "fdot/kernels.hpp"
#include "fdot/measurement.hpp"
#include "fdot/parallel.hpp"
#include "fdot/sensitivity.hpp"
#include "fdot/special.hpp"

namespace py = pybind11;
using namespace fdot;

namespace {

std::vector<std::vector<double>> matrix_to_list(const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(M.rows()));
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(M.cols()));
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = M(i, j);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_fdot, m) {
    m.doc() = "Time-domain fluorescence diffuse optical tomography in a half space";

    py::class_<OpticalMedium>(m, "OpticalMedium")
        .def(py::init(&OpticalMedium::make), py::arg("c"), py::arg("mu_s_prime"), py::arg("mu_a"),
             py::arg("beta"))
        .def_readonly("c", &OpticalMedium::c)
        .def_readonly("mu_s_prime", &OpticalMedium::mu_s_prime)
        .def_readonly("mu_a", &OpticalMedium::mu_a)
        .def_readonly("beta", &OpticalMedium::beta)
        .def_readonly("D", &OpticalMedium::D)
        .def_readonly("mu_A", &OpticalMedium::mu_A);

    py::class_<Fluorophore>(m, "Fluorophore")
        .def(py::init(&Fluorophore::make), py::arg("medium"), py::arg("tau"), py::arg("gamma"))
        .def_readonly("tau", &Fluorophore::tau)
        .def_readonly("gamma", &Fluorophore::gamma)
        .def_readonly("c_f", &Fluorophore::c_f);

    py::class_<BoundaryPoint>(m, "BoundaryPoint")
        .def(py::init<double, double>(), py::arg("x1"), py::arg("x2"))
        .def_readwrite("x1", &BoundaryPoint::x1)
        .def_readwrite("x2", &BoundaryPoint::x2);

    py::class_<Point3>(m, "Point3")
        .def(py::init<double, double, double>(), py::arg("x1"), py::arg("x2"), py::arg("x3"))
        .def_readwrite("x1", &Point3::x1)
        .def_readwrite("x2", &Point3::x2)
        .def_readwrite("x3", &Point3::x3);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init(&TimeGrid::make), py::arg("t0"), py::arg("dt"), py::arg("n"))
        .def_readonly("t0", &TimeGrid::t0)
        .def_readonly("dt", &TimeGrid::dt)
        .def_readonly("n", &TimeGrid::n)
        .def("time", &TimeGrid::time);

    py::class_<SDPair>(m, "SDPair")
        .def(py::init([](const BoundaryPoint& s, const BoundaryPoint& d, const std::string& id) {
                 SDPair p{s, d, id};
                 p.validate();
                 return p;
             }),
             py::arg("source"), py::arg("detector"), py::arg("id") = "")
        .def_readwrite("source", &SDPair::source)
        .def_readwrite("detector", &SDPair::detector)
        .def_readwrite("id", &SDPair::id);

    py::class_<CuboidTarget>(m, "CuboidTarget")
        .def(py::init([](double a1, double b1, double a2, double b2, double a3, double b3,
                         double P) {
                 CuboidTarget t{a1, b1, a2, b2, a3, b3, P};
                 t.validate();
                 return t;
             }),
             py::arg("a1"), py::arg("b1"), py::arg("a2"), py::arg("b2"), py::arg("a3"),
             py::arg("b3"), py::arg("P"))
        .def_readwrite("a1", &CuboidTarget::a1)
        .def_readwrite("b1", &CuboidTarget::b1)
        .def_readwrite("a2", &CuboidTarget::a2)
        .def_readwrite("b2", &CuboidTarget::b2)
        .def_readwrite("a3", &CuboidTarget::a3)
        .def_readwrite("b3", &CuboidTarget::b3)
        .def_readwrite("P", &CuboidTarget::P);

    py::class_<CubeTarget>(m, "CubeTarget")
        .def(py::init([](double X1, double X2, double X3, double L, double Q) {
                 CubeTarget t{X1, X2, X3, L, Q};
                 t.validate();
                 return t;
             }),
             py::arg("X1"), py::arg("X2"), py::arg("X3"), py::arg("L"), py::arg("Q"))
        .def("to_cuboid", &CubeTarget::to_cuboid)
        .def_readwrite("X1", &CubeTarget::X1)
        .def_readwrite("X2", &CubeTarget::X2)
        .def_readwrite("X3", &CubeTarget::X3)
        .def_readwrite("L", &CubeTarget::L)
        .def_readwrite("Q", &CubeTarget::Q);

    py::class_<SphereTarget>(m, "SphereTarget")
        .def(py::init([](const Point3& c, double r, double P) {
                 SphereTarget t{c, r, P};
                 t.validate();
                 return t;
             }),
             py::arg("center"), py::arg("radius"), py::arg("P"))
        .def_readwrite("center", &SphereTarget::center)
        .def_readwrite("radius", &SphereTarget::radius)
        .def_readwrite("P", &SphereTarget::P);

    py::class_<EllipsoidTarget>(m, "EllipsoidTarget")
        .def(py::init([](const Point3& c, double A, double B, double C, double P) {
                 EllipsoidTarget t{c, A, B, C, P};
                 t.validate();
                 return t;
             }),
             py::arg("center"), py::arg("A"), py::arg("B"), py::arg("C"), py::arg("P"))
        .def_readwrite("center", &EllipsoidTarget::center)
        .def_readwrite("A", &EllipsoidTarget::A)
        .def_readwrite("B", &EllipsoidTarget::B)
        .def_readwrite("C", &EllipsoidTarget::C)
        .def_readwrite("P", &EllipsoidTarget::P);

    py::class_<TPSF>(m, "TPSF")
        .def_readonly("pair", &TPSF::pair)
        .def_readonly("grid", &TPSF::grid)
        .def_readonly("values", &TPSF::values);

    py::class_<IRF>(m, "IRF")
        .def(py::init([](const TimeGrid& g, const std::vector<double>& v) {
                 IRF irf{g, v};
                 irf.validate();
                 return irf;
             }),
             py::arg("grid"), py::arg("values"))
        .def_readonly("grid", &IRF::grid)
        .def_readonly("values", &IRF::values);

    py::class_<CuboidQuad>(m, "CuboidQuad")
        .def(py::init<>())
        .def_readwrite("outer", &CuboidQuad::outer)
        .def_readwrite("depth", &CuboidQuad::depth);

    py::class_<VolumeQuad>(m, "VolumeQuad")
        .def(py::init<>())
        .def_readwrite("s", &VolumeQuad::s)
        .def_readwrite("r", &VolumeQuad::r)
        .def_readwrite("phi", &VolumeQuad::phi)
        .def_readwrite("theta", &VolumeQuad::theta);

    m.def("erfcx", &erfcx, py::arg("z"), "exp(z^2) erfc(z), overflow-safe");
    m.def("excitation_density", &excitation_density, py::arg("medium"), py::arg("x"), py::arg("t"),
          py::arg("xs"));
    m.def("green_k3", &green_k3, py::arg("medium"), py::arg("x3"), py::arg("y3"), py::arg("dt"));
    m.def("green_kernel", &green_kernel, py::arg("medium"), py::arg("x"), py::arg("y"),
          py::arg("dt"));

    m.def("cuboid_tpsf", &cuboid_tpsf, py::arg("medium"), py::arg("fluor"), py::arg("target"),
          py::arg("pair"), py::arg("grid"), py::arg("quad") = CuboidQuad{});
    m.def("sphere_tpsf", &sphere_tpsf, py::arg("medium"), py::arg("fluor"), py::arg("target"),
          py::arg("pair"), py::arg("grid"), py::arg("quad") = VolumeQuad{});
    m.def("ellipsoid_tpsf", &ellipsoid_tpsf, py::arg("medium"), py::arg("fluor"), py::arg("target"),
          py::arg("pair"), py::arg("grid"), py::arg("quad") = VolumeQuad{});
    m.def("tilde_u3", &tilde_u3, py::arg("medium"), py::arg("t"), py::arg("s"), py::arg("a3"),
          py::arg("b3"), py::arg("quad") = CuboidQuad{});
    m.def("irf_with_lifetime", &irf_with_lifetime, py::arg("q"), py::arg("tau"));
    m.def("convolve_irf", &convolve_irf, py::arg("model"), py::arg("qtilde"));
    m.def("emission_intensity", &emission_intensity, py::arg("tpsf"));

    m.def("cuboid_gradient", &cuboid_gradient, py::arg("medium"), py::arg("fluor"),
          py::arg("target"), py::arg("pair"), py::arg("t"), py::arg("quad") = CuboidQuad{});
    m.def("asymptotic_gradient", &asymptotic_gradient, py::arg("medium"), py::arg("fluor"),
          py::arg("target"), py::arg("pair"), py::arg("t"));
    m.def("watson_expansion", &watson_expansion, py::arg("k"), py::arg("alpha"), py::arg("f"),
          py::arg("t"), py::arg("order"));
    m.def("theta_matrix_determinant", &theta_matrix_determinant, py::arg("thetas"));
    m.def(
        "sensitivity_rank",
        [](const OpticalMedium& med, const Fluorophore& fl, const CuboidTarget& tgt,
           const std::vector<SDPair>& pairs, const std::vector<double>& times) {
            MeasurementDesign d;
            for (const auto& p : pairs) d.rows.push_back({p, times});
            return numerical_rank(sensitivity_matrix(med, fl, tgt, d));
        },
        py::arg("medium"), py::arg("fluor"), py::arg("target"), py::arg("pairs"), py::arg("times"));
    m.def(
        "sensitivity_matrix",
        [](const OpticalMedium& med, const Fluorophore& fl, const CuboidTarget& tgt,
           const std::vector<SDPair>& pairs, const std::vector<double>& times) {
            MeasurementDesign d;
            for (const auto& p : pairs) d.rows.push_back({p, times});
            return matrix_to_list(sensitivity_matrix(med, fl, tgt, d));
        },
        py::arg("medium"), py::arg("fluor"), py::arg("target"), py::arg("pairs"), py::arg("times"));

    py::class_<HolderLayout>(m, "HolderLayout")
        .def(py::init([](const std::vector<BoundaryPoint>& centers,
                         const std::array<BoundaryPoint, 2>& src,
                         const std::array<BoundaryPoint, 2>& det) {
                 HolderLayout l;
                 l.centers = centers;
                 l.source_offsets = src;
                 l.detector_offsets = det;
                 l.validate();
                 return l;
             }),
             py::arg("centers"),
             py::arg("source_offsets") =
                 std::array<BoundaryPoint, 2>{BoundaryPoint{0.0, 10.0 * 1.7320508075688772},
                                              BoundaryPoint{0.0, -10.0 * 1.7320508075688772}},
             py::arg("detector_offsets") =
                 std::array<BoundaryPoint, 2>{BoundaryPoint{-10.0, 0.0}, BoundaryPoint{10.0, 0.0}})
        .def_readonly("centers", &HolderLayout::centers);
    m.def("holder_pairs", &holder_pairs, py::arg("layout"), py::arg("position_index"));

    py::class_<MeasurementSet>(m, "MeasurementSet")
        .def_property_readonly("values",
                               [](const MeasurementSet& s) {
                                   std::vector<double> v;
                                   for (const auto& e : s.entries) v.push_back(e.value);
                                   return v;
                               })
        .def_property_readonly("times",
                               [](const MeasurementSet& s) {
                                   std::vector<double> v;
                                   for (const auto& e : s.entries) v.push_back(e.t);
                                   return v;
                               })
        .def_property_readonly("size", [](const MeasurementSet& s) { return s.entries.size(); });
    m.def("add_noise", &add_noise, py::arg("data"), py::arg("delta"), py::arg("seed"));

    py::class_<SimulatedMeasurements>(m, "SimulatedMeasurements")
        .def_readonly("set", &SimulatedMeasurements::set)
        .def_property_readonly("intensities", [](const SimulatedMeasurements& s) {
            return s.intensities.per_holder;
        });
    m.def("simulate_measurements", &simulate_measurements, py::arg("medium"), py::arg("fluor"),
          py::arg("truth"), py::arg("layout"), py::arg("grid"), py::arg("delta"), py::arg("seed"),
          py::arg("window_before") = 10, py::arg("window_after") = 9,
          py::arg("vol_quad") = VolumeQuad{}, py::arg("cub_quad") = CuboidQuad{});

    py::class_<GammaRegion>(m, "GammaRegion")
        .def_readonly("x1_lo", &GammaRegion::x1_lo)
        .def_readonly("x1_hi", &GammaRegion::x1_hi)
        .def_readonly("x2_lo", &GammaRegion::x2_lo)
        .def_readonly("x2_hi", &GammaRegion::x2_hi);
    m.def(
        "step1_prior",
        [](const std::vector<std::array<double, 4>>& table, const HolderLayout& layout) {
            IntensityTable t{table};
            return step1_prior(t, layout);
        },
        py::arg("intensities"), py::arg("layout"));

    m.def(
        "invert_three_step",
        [](const OpticalMedium& med, const Fluorophore& fl, const SimulatedMeasurements& sim,
           const HolderLayout& layout, const std::array<double, 2>& init_xy,
           const std::array<double, 3>& init_rest) {
            PipelineConfig pc;
            pc.medium = med;
            pc.fluor = fl;
            pc.init_xy = init_xy;
            pc.init_rest = init_rest;
            PipelineInput in{sim.set, sim.design, sim.intensities, layout, {}, {}};
            const PipelineReport rep = run_pipeline(pc, in);
            py::dict out;
            out["gamma"] = py::make_tuple(rep.gamma.x1_lo, rep.gamma.x1_hi, rep.gamma.x2_lo,
                                          rep.gamma.x2_hi);
            out["cube"] = py::make_tuple(rep.step2.cube.X1, rep.step2.cube.X2, rep.step2.cube.X3,
                                         rep.step2.cube.L, rep.step2.cube.Q);
            if (!rep.no_target) {
                const auto& c = rep.step3.cuboid;
                out["cuboid"] = py::make_tuple(c.a1, c.b1, c.a2, c.b2, c.a3, c.b3, c.P);
            }
            out["no_target"] = rep.no_target;
            out["err"] = rep.err;
            return out;
        },
        py::arg("medium"), py::arg("fluor"), py::arg("sim"), py::arg("layout"), py::arg("init_xy"),
        py::arg("init_rest"), "Run Step 1 -> 2 -> 3 on simulated measurements");

    m.def("set_max_threads", &set_max_threads, py::arg("n"));
}

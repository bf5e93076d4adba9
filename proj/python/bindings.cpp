#include "fieldseg/annealing.hpp"
#include "fieldseg/codec.hpp"
#include "fieldseg/criticality.hpp"
#include "fieldseg/error.hpp"
#include "fieldseg/segmentation.hpp"
#include "fieldseg/stats.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace fieldseg;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

PixelGrid to_grid(const ImageArray& image) {
    if (image.ndim() != 2) throw py::value_error("image must be a 2-D uint8 array");
    const auto rows = static_cast<int>(image.shape(0));
    const auto cols = static_cast<int>(image.shape(1));
    std::vector<std::uint8_t> v(image.data(), image.data() + image.size());
    return PixelGrid(rows, cols, std::move(v));
}

py::array_t<std::uint8_t> to_array(const PixelGrid& grid) {
    py::array_t<std::uint8_t> out({grid.rows(), grid.cols()});
    std::memcpy(out.mutable_data(), grid.values().data(), grid.size());
    return out;
}

py::array_t<std::uint8_t> mask_array(const std::vector<std::uint8_t>& mask, int rows, int cols) {
    py::array_t<std::uint8_t> out({rows, cols});
    std::memcpy(out.mutable_data(), mask.data(), mask.size());
    return out;
}

SegmentationParams make_params(int epsilon, int tau, int m_c, const std::string& mode, std::uint64_t seed, int k_c) {
    const auto parsed = parse_smooth_mode(mode);
    if (!parsed) throw py::value_error("unknown mode '" + mode + "'");
    SegmentationParams p;
    p.epsilon = epsilon;
    p.tau = tau;
    p.m_c = m_c;
    p.mode = *parsed;
    p.seed = seed;
    p.k_c = k_c;
    return p;
}

py::dict criticality_dict(const CriticalityResult& r) {
    py::dict d;
    d["m"] = r.m;
    d["rho"] = r.rho;
    d["k_solution"] = r.k_solution;
    d["K_c"] = r.k_c;
    d["m_c"] = r.m_c;
    d["R_c"] = r.r_c;
    return d;
}

} // namespace

PYBIND11_MODULE(_fieldseg, mod) {
    mod.doc() = "Critical-region segmentation, compression and statistics for grayscale images";

    py::register_exception<Error>(mod, "FieldsegError", PyExc_ValueError);

    mod.def(
        "criticality", [](int m, double rho) { return criticality_dict(compute_criticality(m, rho)); }, py::arg("m"),
        py::arg("rho") = kSquareLatticeRho);
    mod.def(
        "default_m", [](int rows, int cols) { return default_m(rows, cols); }, py::arg("rows"), py::arg("cols"));

    mod.def(
        "segment",
        [](const ImageArray& image, int epsilon, int tau, int m_c, const std::string& mode, std::uint64_t seed,
           int k_c) {
            const PixelGrid g = to_grid(image);
            const SegmentationResult r = segment(g, make_params(epsilon, tau, m_c, mode, seed, k_c));
            py::list proposals;
            for (const auto& p : r.proposals) {
                py::dict d;
                d["box"] = py::make_tuple(p.top, p.left, p.bottom, p.right);
                d["pixels"] = p.pixels;
                proposals.append(d);
            }
            py::dict out;
            out["equilibrium"] = to_array(r.equilibrium);
            out["difference"] = to_array(r.difference);
            out["mask"] = mask_array(r.mask, g.rows(), g.cols());
            out["overlay"] = to_array(r.overlay);
            out["proposals"] = proposals;
            out["violation_rate"] = r.violation_rate;
            return out;
        },
        py::arg("image"), py::arg("epsilon") = 70, py::arg("tau") = 1, py::arg("m_c") = 2,
        py::arg("mode") = "empirical", py::arg("seed") = 0, py::arg("k_c") = 2);

    mod.def(
        "compress",
        [](const ImageArray& image, int m_c, std::uint64_t seed) {
            const auto bytes = write_rfc(compress(to_grid(image), m_c, seed));
            return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("image"), py::arg("m_c") = 2, py::arg("seed") = 0, "Compress to RFC1 bytes.");
    mod.def(
        "reconstruct",
        [](const py::bytes& data, bool render) {
            const std::string_view view = data;
            const std::span bytes(reinterpret_cast<const std::uint8_t*>(view.data()), view.size());
            const CompressedImage c = read_rfc(bytes);
            return to_array(render ? render_compressed(c) : reconstruct(c));
        },
        py::arg("data"), py::arg("render") = false, "Rebuild an image from RFC1 bytes.");

    mod.def(
        "kl_divergence",
        [](const ImageArray& p, const ImageArray& q) {
            return kl_divergence(histogram(to_grid(p)), histogram(to_grid(q)));
        },
        py::arg("p"), py::arg("q"));
    mod.def(
        "shapiro_wilk",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& sample, std::size_t max_n,
           std::uint64_t seed) {
            const SwReport r = shapiro_wilk(std::span<const double>(sample.data(), sample.size()), max_n, seed);
            return py::make_tuple(r.w, r.n, r.subsampled);
        },
        py::arg("sample"), py::arg("max_n") = kSwMaxSample, py::arg("seed") = 0,
        "Returns (W, sample size used, subsampled).");

    mod.def(
        "sweep",
        [](const ImageArray& image, const std::vector<int>& epsilons, int m_c, const std::string& mode,
           std::uint64_t seed) {
            if (epsilons.empty()) throw py::value_error("epsilons must not be empty");
            const auto rows = sweep(to_grid(image), make_params(epsilons.front(), 1, m_c, mode, seed, 2), epsilons);
            py::list out;
            for (const auto& r : rows) out.append(py::make_tuple(r.epsilon, r.e, r.s));
            return out;
        },
        py::arg("image"), py::arg("epsilons"), py::arg("m_c") = 2, py::arg("mode") = "empirical",
        py::arg("seed") = 0, "Rows of (epsilon, E, S).");

    mod.def(
        "anneal",
        [](const ImageArray& image, int epsilon, double p_keep, double t0, int stops, int sweeps, double tol,
           std::uint64_t seed) {
            AnnealParams p;
            p.epsilon = epsilon;
            p.p_keep = p_keep;
            p.t0 = t0;
            p.n_stops = stops;
            p.sweeps_per_stop = sweeps;
            p.tol = tol;
            p.seed = seed;
            const EquilibriumResult r = anneal(to_grid(image), p);
            py::dict out;
            out["smoothed"] = to_array(r.smoothed);
            out["energy_trace"] = r.energy_trace;
            out["temperatures"] = r.temperatures;
            out["stops"] = r.stops;
            return out;
        },
        py::arg("image"), py::arg("epsilon") = 10, py::arg("p_keep") = 0.05, py::arg("t0") = 10.0,
        py::arg("stops") = 64, py::arg("sweeps") = 4, py::arg("tol") = 1e-3, py::arg("seed") = 0);
}

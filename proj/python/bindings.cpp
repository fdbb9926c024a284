#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "unmix/endmember_init.hpp"
#include "unmix/gradcheck.hpp"
#include "unmix/metrics.hpp"
#include "unmix/mixing.hpp"
#include "unmix/model.hpp"
#include "unmix/training.hpp"

namespace py = pybind11;
using namespace unmix;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const FloatArray& arr) {
    const auto info = arr.request();
    Shape shape;
    for (auto d : info.shape) shape.push_back(static_cast<int>(d));
    const float* p = static_cast<const float*>(info.ptr);
    return Tensor::from_data(shape, std::vector<float>(p, p + arr.size()));
}

py::array_t<float> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape;
    for (int e : t.shape()) shape.push_back(e);
    py::array_t<float> out(shape);
    std::copy(t.data(), t.data() + t.numel(), static_cast<float*>(out.request().ptr));
    return out;
}

HsiCube cube_from_array(const FloatArray& arr) {
    if (arr.ndim() != 3) throw ShapeError("cube array must be (rows, cols, bands)");
    return HsiCube::wrap(tensor_from_array(arr));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonlinear hyperspectral unmixing: mixing-model simulators, VCA, "
              "dilated-transformer autoencoder training and metrics";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ValueError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "lmm_pixel",
        [](const FloatArray& endmembers, const FloatArray& abundance) {
            const auto em = EndmemberMatrix::wrap(tensor_from_array(endmembers));
            const auto a = tensor_from_array(abundance);
            auto y = lmm_pixel(em, {a.data(), static_cast<std::size_t>(a.numel())});
            return py::array_t<float>(static_cast<py::ssize_t>(y.size()), y.data());
        },
        py::arg("endmembers"), py::arg("abundance"));

    m.def(
        "ppnmm_pixel",
        [](const FloatArray& endmembers, const FloatArray& abundance, float b) {
            const auto em = EndmemberMatrix::wrap(tensor_from_array(endmembers));
            const auto a = tensor_from_array(abundance);
            auto y = ppnmm_pixel(em, {a.data(), static_cast<std::size_t>(a.numel())}, b);
            return py::array_t<float>(static_cast<py::ssize_t>(y.size()), y.data());
        },
        py::arg("endmembers"), py::arg("abundance"), py::arg("b"));

    m.def(
        "ppnmm_image",
        [](const FloatArray& abundance, const FloatArray& endmembers, const FloatArray& bfield) {
            AbundanceTensor a;
            a.values = tensor_from_array(abundance);
            const auto em = EndmemberMatrix::wrap(tensor_from_array(endmembers));
            NonlinearField b;
            b.values = tensor_from_array(bfield);
            return array_from_tensor(ppnmm_image(a, em, b).data);
        },
        py::arg("abundance"), py::arg("endmembers"), py::arg("bfield"));

    m.def(
        "gen_dataset",
        [](const std::string& model, int rows, int cols, int endmembers, int bands,
           std::optional<float> snr_db, std::uint64_t seed, float smoothness) {
            auto ds = gen_dataset(parse_mix_model(model), rows, cols, endmembers, bands, snr_db,
                                  seed, smoothness);
            py::dict out;
            out["cube"] = array_from_tensor(ds.cube.data);
            out["abundance"] = array_from_tensor(ds.abundance.values);
            out["endmembers"] = array_from_tensor(ds.endmembers.values);
            if (ds.bfield) out["bfield"] = array_from_tensor(ds.bfield->values);
            if (ds.gbm_coeffs) out["beta"] = array_from_tensor(ds.gbm_coeffs->beta);
            return out;
        },
        py::arg("model"), py::arg("rows"), py::arg("cols"), py::arg("endmembers"),
        py::arg("bands"), py::arg("snr_db") = std::nullopt, py::arg("seed") = 0,
        py::arg("smoothness") = 2.0f);

    m.def(
        "vca",
        [](const FloatArray& cube, int endmembers, std::uint64_t seed) {
            return array_from_tensor(vca(cube_from_array(cube), endmembers, seed).values);
        },
        py::arg("cube"), py::arg("endmembers"), py::arg("seed") = 0);

    m.def(
        "farthest_point_init",
        [](const FloatArray& cube, int endmembers) {
            return array_from_tensor(farthest_point_init(cube_from_array(cube), endmembers).values);
        },
        py::arg("cube"), py::arg("endmembers"));

    m.def(
        "evaluate",
        [](const FloatArray& est_endmembers, const FloatArray& true_endmembers,
           const FloatArray& est_abundance, const FloatArray& true_abundance,
           std::optional<FloatArray> est_bfield, std::optional<FloatArray> true_bfield) {
            const auto em_est = EndmemberMatrix::wrap(tensor_from_array(est_endmembers));
            const auto em_true = EndmemberMatrix::wrap(tensor_from_array(true_endmembers));
            AbundanceTensor ab_est, ab_true;
            ab_est.values = tensor_from_array(est_abundance);
            ab_true.values = tensor_from_array(true_abundance);
            const auto perm = match_endmembers(em_est, em_true);
            py::dict out;
            out["permutation"] = perm;
            out["rmse_abun"] = rmse_abun(ab_est, ab_true, perm);
            out["sad_end"] = sad_end(em_est, em_true, perm);
            if (est_bfield && true_bfield) {
                NonlinearField b_est, b_true;
                b_est.values = tensor_from_array(*est_bfield);
                b_true.values = tensor_from_array(*true_bfield);
                out["rmse_b"] = rmse_b(b_est, b_true);
            }
            return out;
        },
        py::arg("est_endmembers"), py::arg("true_endmembers"), py::arg("est_abundance"),
        py::arg("true_abundance"), py::arg("est_bfield") = std::nullopt,
        py::arg("true_bfield") = std::nullopt);

    m.def(
        "train_unmix",
        [](const FloatArray& cube, int endmembers, int epochs, int c_embed, float gamma,
           float alpha, float lr_endmember, float lr_rest, float weight_decay,
           std::uint64_t seed, const std::string& init, const std::string& ablate,
           int spectral_channels) {
            const auto y = cube_from_array(cube);
            EncoderConfig enc;
            enc.embed_channels = c_embed;
            enc.gamma = gamma;
            enc.spectral_channels = spectral_channels;
            DtuNet model(y.bands, endmembers, enc, seed);
            model.ablation = parse_ablation(ablate);
            InitConfig ic;
            ic.method = InitConfig::parse_method(init);
            ic.seed = seed;
            model.decoder.set_endmembers(init_endmembers(y, endmembers, ic));

            TrainConfig tc;
            tc.epochs = epochs;
            tc.alpha = alpha;
            tc.lr_endmember = lr_endmember;
            tc.lr_rest = lr_rest;
            tc.weight_decay = weight_decay;
            tc.seed = seed;
            const auto record = train(model, y, tc);

            const auto out = model.forward(y.data);
            py::dict result;
            result["abundance"] = array_from_tensor(out.abundance);
            result["endmembers"] = array_from_tensor(model.decoder.extract_endmembers().values);
            result["bfield"] = array_from_tensor(out.b_field);
            result["reconstruction"] = array_from_tensor(out.y_hat);
            py::list losses;
            for (const auto& e : record.epochs) losses.append(py::make_tuple(e.total, e.re, e.sad));
            result["losses"] = losses;
            return result;
        },
        py::arg("cube"), py::arg("endmembers"), py::arg("epochs") = 600,
        py::arg("c_embed") = 108, py::arg("gamma") = 1.0f, py::arg("alpha") = 0.5f,
        py::arg("lr_endmember") = 1e-5f, py::arg("lr_rest") = 1e-2f,
        py::arg("weight_decay") = 1e-3f, py::arg("seed") = 0, py::arg("init") = "vca",
        py::arg("ablate") = "none", py::arg("spectral_channels") = 16);

    m.def("gradcheck", [](const std::string& filter, double eps) {
        py::dict out;
        for (const auto& c : gradcheck_suite()) {
            if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
            out[py::str(c.name)] = c.run(eps);
        }
        return out;
    }, py::arg("filter") = "", py::arg("eps") = 3e-3);

    m.attr("__version__") = "0.1.0";
}

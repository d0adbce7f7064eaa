#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aki/isotonic.hpp"
#include "aki/metrics.hpp"
#include "aki/nephrotox.hpp"
#include "aki/renal.hpp"
#include "aki/staging.hpp"

namespace py = pybind11;
using namespace aki;

namespace {

Sex sex_from_arg(const std::string& s) {
    auto sex = sex_from_string(s);
    if (!sex) throw py::value_error("sex must be FEMALE or MALE");
    return *sex;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "renal calculators, KDIGO staging and evaluation metrics";

    m.def(
        "egfr_ckdepi_2021",
        [](double scr, double age, const std::string& sex) {
            return egfr_ckdepi_2021(scr, age, sex_from_arg(sex));
        },
        py::arg("scr"), py::arg("age"), py::arg("sex"),
        "2021 CKD-EPI creatinine eGFR (race-free refit), mL/min/1.73m^2");
    m.def(
        "backcalc_scr",
        [](double target_egfr, double age, const std::string& sex) {
            return backcalc_scr(target_egfr, age, sex_from_arg(sex));
        },
        py::arg("target_egfr"), py::arg("age"), py::arg("sex"),
        "creatinine whose eGFR equals the target (bisection inverse)");
    m.def("kegfr", &kegfr, py::arg("scr_prev"), py::arg("scr_curr"), py::arg("dt_hours"),
          py::arg("ref_scr"), py::arg("ref_egfr"), py::arg("constants") = RenalConstants{},
          "kinetic eGFR between two creatinine measurements");
    py::class_<RenalConstants>(m, "RenalConstants").def(py::init<>());

    m.def(
        "weight_from_nxp",
        [](const std::string& score) {
            if (score == "NEW") return weight_from_nxp(NxpScore::added());
            return weight_from_nxp(NxpScore::score(std::stod(score)));
        },
        py::arg("score"), "nephrotoxin weight from an NxP score ('1.0'..'3.0' or 'NEW')");

    m.def(
        "stage_at_measurement",
        [](double scr, double reference, const std::vector<double>& lookback_48h,
           bool rrt_active) {
            ReferenceCreatinine ref{reference, ReferenceSource::MEASURED_PREADMISSION, 0};
            return std::string(to_string(stage_at_measurement(scr, ref, lookback_48h, rrt_active)));
        },
        py::arg("scr"), py::arg("reference"), py::arg("lookback_48h") = std::vector<double>{},
        py::arg("rrt_active") = false, "KDIGO stage for one creatinine measurement");

    m.def(
        "auroc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return auroc(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "average_precision",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return average_precision(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "youden_threshold",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return youden_threshold(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));

    py::class_<IsotonicCalibrator>(m, "IsotonicCalibrator")
        .def_readonly("breakpoints", &IsotonicCalibrator::breakpoints)
        .def_readonly("values", &IsotonicCalibrator::values)
        .def("apply", &IsotonicCalibrator::apply, py::arg("score"));
    m.def(
        "fit_isotonic",
        [](const std::vector<std::pair<double, double>>& rows) { return fit_isotonic(rows); },
        py::arg("rows"), "pool-adjacent-violators calibrator over (score, label) pairs");

    m.def(
        "reliability_bins",
        [](const std::vector<std::pair<double, double>>& rows, int bins) {
            const auto d = reliability_bins(rows, bins);
            py::list out;
            for (const auto& b : d.bins)
                out.append(py::make_tuple(b.bin_low, b.bin_high, b.count, b.mean_score,
                                          b.event_rate));
            return py::make_tuple(out, d.expected_calibration_error);
        },
        py::arg("rows"), py::arg("bins") = 20);
}

// Python bindings for the b92sim core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "b92sim/errors.hpp"
#include "b92sim/harness.hpp"

namespace py = pybind11;
using namespace b92;

namespace {

py::dict summary_dict(const RunSummary& s) {
    py::dict d;
    d["clock_hz"] = s.clock_hz;
    d["length_km"] = s.length_km;
    d["profile"] = s.profile_name;
    d["channel_mode"] = std::string(to_string(s.channel_mode));
    d["slots_simulated"] = s.slots_simulated;
    d["detected_rate_cps"] = py::make_tuple(s.detected_rate_cps[0], s.detected_rate_cps[1]);
    d["detected_rate_total_cps"] = s.detected_rate_total_cps;
    d["sift_rate_bps"] = s.sift_rate_bps;
    d["qber"] = s.qber ? py::object(py::float_(*s.qber)) : py::object(py::none());
    d["qber_err"] = s.statistical_error_qber;
    d["net_rate_bps"] = s.net_rate_bps;
    d["sifted_bits"] = s.sifted_bits;
    d["sifted_errors"] = s.sifted_errors;
    d["double_click_slots"] = s.double_click_slots;
    d["gate_rejected"] = s.gate_rejected;
    return d;
}

} // namespace

PYBIND11_MODULE(_b92sim, m) {
    m.doc() = "Gigahertz-clocked B92 QKD link simulator";
    m.attr("__version__") = B92SIM_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    py::enum_<ChannelMode>(m, "ChannelMode")
        .value("FullFiber", ChannelMode::FullFiber)
        .value("AttenuatorOnly", ChannelMode::AttenuatorOnly);

    py::class_<SourceSpec>(m, "SourceSpec")
        .def(py::init<>())
        .def_readwrite("clock_hz", &SourceSpec::clock_hz)
        .def_readwrite("mean_photon_number", &SourceSpec::mean_photon_number)
        .def_readwrite("base_pulse_fwhm_ps", &SourceSpec::base_pulse_fwhm_ps)
        .def_readwrite("emitter_bandwidth_hz", &SourceSpec::emitter_bandwidth_hz);

    py::class_<ChannelSpec>(m, "ChannelSpec")
        .def(py::init<>())
        .def_readwrite("length_km", &ChannelSpec::length_km)
        .def_readwrite("atten_db_per_km", &ChannelSpec::atten_db_per_km)
        .def_readwrite("broadening_ps_per_km", &ChannelSpec::broadening_ps_per_km)
        .def_readwrite("mode", &ChannelSpec::mode)
        .def_readwrite("excess_loss_db", &ChannelSpec::excess_loss_db);

    py::class_<DetectorProfile>(m, "DetectorProfile")
        .def_static("standard", &DetectorProfile::standard)
        .def_static("enhanced", &DetectorProfile::enhanced)
        .def_readonly("name", &DetectorProfile::name)
        .def_readwrite("efficiency", &DetectorProfile::efficiency)
        .def_readwrite("dark_cps", &DetectorProfile::dark_cps)
        .def_readwrite("dead_time_ns", &DetectorProfile::dead_time_ns)
        .def_readwrite("centroid_alpha", &DetectorProfile::centroid_alpha)
        .def("jitter_fwhm_at", [](const DetectorProfile& p, double rate) { return jitter_fwhm_at(p, rate); });

    py::class_<GateSpec>(m, "GateSpec")
        .def(py::init<>())
        .def_readwrite("gate_fraction", &GateSpec::gate_fraction)
        .def_readwrite("window_offset_ps", &GateSpec::window_offset_ps);

    py::class_<LinkConfig>(m, "LinkConfig")
        .def(py::init<>())
        .def_readwrite("source", &LinkConfig::source)
        .def_readwrite("channel", &LinkConfig::channel)
        .def_readwrite("detector", &LinkConfig::detector)
        .def_readwrite("gate", &LinkConfig::gate)
        .def_readwrite("sync_fwhm_ps", &LinkConfig::sync_fwhm_ps)
        .def("validate", &LinkConfig::validate);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("name", &SimConfig::name)
        .def_readwrite("source", &SimConfig::source)
        .def_readwrite("channel", &SimConfig::channel)
        .def_readwrite("profile", &SimConfig::profile)
        .def_readwrite("dark_cps", &SimConfig::dark_cps)
        .def_readwrite("gate", &SimConfig::gate)
        .def_readwrite("sync_fwhm_ps", &SimConfig::sync_fwhm_ps)
        .def_readwrite("n_slots", &SimConfig::n_slots)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("workers", &SimConfig::workers)
        .def("link", py::overload_cast<const std::string&>(&SimConfig::link, py::const_), py::arg("profile"))
        .def("validate", &SimConfig::validate)
        .def("to_toml", [](const SimConfig& c) { return to_toml(c); });

    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("load_config", &load_config, py::arg("path"));

    m.def(
        "run_link",
        [](const LinkConfig& c, std::int64_t n_slots, std::uint64_t seed) {
            Rng rng(seed);
            LinkResult r;
            {
                py::gil_scoped_release release;
                r = run_link(c, n_slots, rng);
            }
            py::dict d = summary_dict(r.summary);
            d["alice_bits"] = r.sifted.alice_bits;
            d["bob_bits"] = r.sifted.bob_bits;
            return d;
        },
        py::arg("config"), py::arg("n_slots"), py::arg("seed"),
        "Simulate n_slots clock periods; returns the run summary plus the sifted keys.");

    m.def(
        "predict",
        [](const LinkConfig& c) {
            const auto p = predict(c);
            py::dict d;
            d["qber"] = p.qber ? py::object(py::float_(*p.qber)) : py::object(py::none());
            d["net_rate_bps"] = p.net_rate_bps;
            d["sift_rate_bps"] = p.rates.sift_rate_bps;
            d["detected_rate_total_cps"] = p.rates.detected_total_cps;
            d["total_fwhm_ps"] = p.budget.total_fwhm_ps();
            d["p_wrong_slot"] = p.leakage.p_wrong_slot;
            d["p_rejected"] = p.leakage.p_rejected;
            return d;
        },
        py::arg("config"), "Analytic QBER and rate prediction.");

    m.def(
        "gate_leakage",
        [](double fwhm, double clock_hz, double gate_fraction, double offset) {
            GateSpec g;
            g.gate_fraction = gate_fraction;
            const auto l = gate_leakage(fwhm, clock_hz, g, offset);
            return py::make_tuple(l.p_wrong_slot, l.p_rejected);
        },
        py::arg("fwhm_ps"), py::arg("clock_hz"), py::arg("gate_fraction") = 1.0, py::arg("centroid_offset_ps") = 0.0,
        "Returns (p_wrong_slot, p_rejected).");

    m.def("binary_entropy", &binary_entropy, py::arg("p"));
    m.def(
        "net_rate",
        [](double sift, double q, double threshold, double f) { return net_rate(sift, q, SecurityParams{threshold, f}); },
        py::arg("sift_rate_bps"), py::arg("qber"), py::arg("threshold") = 0.10, py::arg("f") = 1.16);

    m.def(
        "reconcile",
        [](const BitString& alice, const BitString& bob, double q, std::uint64_t seed) {
            Rng rng(seed);
            const auto r = reconcile(alice, bob, q, rng);
            py::dict d;
            d["bob_key"] = r.bob_key;
            d["passes"] = r.report.passes;
            d["parity_bits_leaked"] = r.report.parity_bits_leaked;
            d["residual_errors"] = r.report.residual_errors;
            d["corrections"] = r.report.corrections;
            return d;
        },
        py::arg("alice"), py::arg("bob"), py::arg("qber_estimate"), py::arg("seed"));
    m.def("privacy_amplify", &privacy_amplify, py::arg("key"), py::arg("seed"), py::arg("output_len"));
    m.def("to_hex", &to_hex, py::arg("bits"));

    m.def(
        "calibrate",
        [](const SimConfig& start, bool monte_carlo) {
            CalibrationOptions o;
            o.run_monte_carlo = monte_carlo;
            o.seed = start.seed;
            CalibrationResult r;
            {
                py::gil_scoped_release release;
                r = calibrate(start, Anchors::reference(), o);
            }
            return py::make_tuple(r.fitted, r.success, r.report());
        },
        py::arg("start"), py::arg("monte_carlo") = true,
        "Fit to the reference anchors; returns (fitted_config, success, report).");

    m.def(
        "sweep_preset_csv",
        [](const std::string& name, const SimConfig& base, int workers) {
            const auto spec = preset(name, base);
            ResultTable t;
            {
                py::gil_scoped_release release;
                t = run_sweep(spec, workers);
            }
            return format_csv(t);
        },
        py::arg("preset"), py::arg("base"), py::arg("workers") = 1, "Run a figure preset; returns the CSV text.");
}

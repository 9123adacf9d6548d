#pragma once

#include "mrtk/ce_unet.hpp"
#include "mrtk/context.hpp"
#include "mrtk/phantom.hpp"
#include "mrtk/recon.hpp"

namespace mrtk {

// JSON (de)serialization for every configurable type, plus the single config
// document with sections {phantom, coils, degradation, recon,
// scenario_distribution, train, eval} and dotted-path overrides.

// --- small helpers ----------------------------------------------------------

namespace cfg_detail {

inline std::array<double, 3> arr3(const json& j, const char* key, std::array<double, 3> dflt) {
    if (!j.contains(key)) return dflt;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 3) throw ValidationError(std::string("config: ") + key + " must have 3 entries");
    return {v[0], v[1], v[2]};
}

inline json arr3_json(const std::array<double, 3>& a) { return json{a[0], a[1], a[2]}; }

}  // namespace cfg_detail

// --- phantom ------------------------------------------------------------------

inline json to_json(const EllipsoidSpec& e) {
    return json{{"center", cfg_detail::arr3_json(e.center)},
                {"semi_axes", cfg_detail::arr3_json(e.semi_axes)},
                {"euler_angles", cfg_detail::arr3_json(e.euler_angles)},
                {"intensity", e.intensity}};
}

inline EllipsoidSpec ellipsoid_from_json(const json& j) {
    EllipsoidSpec e;
    e.center = cfg_detail::arr3(j, "center", e.center);
    e.semi_axes = cfg_detail::arr3(j, "semi_axes", e.semi_axes);
    e.euler_angles = cfg_detail::arr3(j, "euler_angles", e.euler_angles);
    e.intensity = j.value("intensity", e.intensity);
    return e;
}

inline json to_json(const PhantomSpec& p) {
    json ell = json::array();
    for (const auto& e : p.ellipsoids) ell.push_back(to_json(e));
    return json{{"ellipsoids", ell}, {"phase_poly", p.phase_poly}, {"edge_softening", p.edge_softening}};
}

inline PhantomSpec phantom_from_json(const json& j) {
    PhantomSpec p;
    if (j.contains("ellipsoids"))
        for (const auto& e : j.at("ellipsoids")) p.ellipsoids.push_back(ellipsoid_from_json(e));
    if (j.contains("phase_poly")) p.phase_poly = j.at("phase_poly").get<std::vector<double>>();
    p.edge_softening = j.value("edge_softening", 0.0);
    return p;
}

inline json to_json(const CoilProfileSpec& c) {
    return json{{"ncoils", c.ncoils},
                {"ring_radius", c.ring_radius},
                {"falloff", c.falloff},
                {"normalize_sos", c.normalize_sos}};
}

inline CoilProfileSpec coils_from_json(const json& j) {
    CoilProfileSpec c;
    c.ncoils = j.value("ncoils", c.ncoils);
    c.ring_radius = j.value("ring_radius", c.ring_radius);
    c.falloff = j.value("falloff", c.falloff);
    c.normalize_sos = j.value("normalize_sos", c.normalize_sos);
    return c;
}

// --- degradation ----------------------------------------------------------------

inline json to_json(const DegradationPlan& p) {
    json j{{"noise_add_ratio", p.noise_add_ratio},
           {"kmax_fraction", cfg_detail::arr3_json(p.kmax_fraction)},
           {"elliptical", p.elliptical},
           {"pf_fraction", cfg_detail::arr3_json(p.pf_fraction)}};
    if (p.uniform)
        j["uniform"] = {{"axis", axis_name(p.uniform->axis)},
                        {"R", p.uniform->R},
                        {"acs_lines", p.uniform->acs_lines}};
    if (p.random)
        j["random"] = {{"axis", axis_name(p.random->axis)},
                       {"accel", p.random->accel},
                       {"density_power", p.random->density_power},
                       {"seed", p.random->seed}};
    return j;
}

inline DegradationPlan degradation_from_json(const json& j) {
    DegradationPlan p;
    p.noise_add_ratio = j.value("noise_add_ratio", 0.0);
    p.kmax_fraction = cfg_detail::arr3(j, "kmax_fraction", p.kmax_fraction);
    p.elliptical = j.value("elliptical", false);
    p.pf_fraction = cfg_detail::arr3(j, "pf_fraction", p.pf_fraction);
    if (j.contains("uniform") && !j.at("uniform").is_null()) {
        UniformParams u;
        const json& ju = j.at("uniform");
        u.axis = axis_from_name(ju.value("axis", "phase"));
        u.R = ju.value("R", 2);
        u.acs_lines = ju.value("acs_lines", 0);
        p.uniform = u;
    }
    if (j.contains("random") && !j.at("random").is_null()) {
        RandomParams r;
        const json& jr = j.at("random");
        r.axis = axis_from_name(jr.value("axis", "phase"));
        r.accel = jr.value("accel", 2.0);
        r.density_power = jr.value("density_power", 2.0);
        r.seed = jr.value("seed", std::uint64_t{0});
        p.random = r;
    }
    return p;
}

// --- recon -----------------------------------------------------------------------

inline const char* component_name(Component c) {
    switch (c) {
        case Component::magnitude: return "magnitude";
        case Component::phase: return "phase";
        case Component::real_part: return "real";
        case Component::imaginary: return "imaginary";
    }
    return "?";
}

inline Component component_from_name(const std::string& s) {
    if (s == "magnitude") return Component::magnitude;
    if (s == "phase") return Component::phase;
    if (s == "real") return Component::real_part;
    if (s == "imaginary") return Component::imaginary;
    throw ValidationError("config: unknown component " + s);
}

inline json to_json(const ReconPlan& p) {
    json j{{"pf", p.pf == PfMode::none ? "none" : (p.pf == PfMode::pocs ? "pocs" : "zero_fill")},
           {"combine", p.combine == CombineMode::rss ? "rss" : "sens_weighted"},
           {"normalize_intensity", p.normalize_intensity},
           {"component", component_name(p.component)},
           {"quantize_bits", p.quantize_bits},
           {"pocs", {{"iters", p.pocs.iters}, {"tol", p.pocs.tol}}}};
    if (p.window)
        j["window"] = {{"alpha", p.window->alpha},
                       {"axes", {p.window->axes[0], p.window->axes[1], p.window->axes[2]}}};
    if (p.zpad_dims) j["zpad_dims"] = {p.zpad_dims->nx, p.zpad_dims->ny, p.zpad_dims->nz};
    if (p.sense) j["sense"] = {{"axis", axis_name(p.sense->axis)}, {"R", p.sense->R}};
    if (p.warp)
        j["warp"] = {{"c2", p.warp->c2},
                     {"c4", p.warp->c4},
                     {"jacobian_correction", p.warp->jacobian_correction}};
    return j;
}

inline ReconPlan recon_from_json(const json& j) {
    ReconPlan p;
    const std::string pf = j.value("pf", "none");
    if (pf == "none") p.pf = PfMode::none;
    else if (pf == "zero_fill") p.pf = PfMode::zero_fill;
    else if (pf == "pocs") p.pf = PfMode::pocs;
    else throw ValidationError("config: unknown pf mode " + pf);
    const std::string comb = j.value("combine", "rss");
    if (comb == "rss") p.combine = CombineMode::rss;
    else if (comb == "sens_weighted") p.combine = CombineMode::sens_weighted;
    else throw ValidationError("config: unknown combine mode " + comb);
    p.normalize_intensity = j.value("normalize_intensity", false);
    p.component = component_from_name(j.value("component", "magnitude"));
    p.quantize_bits = j.value("quantize_bits", 0);
    if (j.contains("pocs")) {
        p.pocs.iters = j.at("pocs").value("iters", 10);
        p.pocs.tol = j.at("pocs").value("tol", 1e-6);
    }
    if (j.contains("window") && !j.at("window").is_null()) {
        WindowSpec w;
        w.alpha = j.at("window").value("alpha", 0.5);
        if (j.at("window").contains("axes")) {
            const auto a = j.at("window").at("axes").get<std::vector<bool>>();
            if (a.size() != 3) throw ValidationError("config: window.axes must have 3 entries");
            w.axes = {a[0], a[1], a[2]};
        }
        p.window = w;
    }
    if (j.contains("zpad_dims") && !j.at("zpad_dims").is_null()) {
        const auto d = j.at("zpad_dims").get<std::vector<std::size_t>>();
        if (d.size() != 3) throw ValidationError("config: zpad_dims must have 3 entries");
        p.zpad_dims = Shape3{d[0], d[1], d[2]};
    }
    if (j.contains("sense") && !j.at("sense").is_null()) {
        SenseSpec s;
        s.axis = axis_from_name(j.at("sense").value("axis", "phase"));
        s.R = j.at("sense").value("R", 2);
        p.sense = s;
    }
    if (j.contains("warp") && !j.at("warp").is_null()) {
        WarpSpec w;
        w.c2 = j.at("warp").value("c2", 0.0);
        w.c4 = j.at("warp").value("c4", 0.0);
        w.jacobian_correction = j.at("warp").value("jacobian_correction", false);
        p.warp = w;
    }
    return p;
}

// --- context ----------------------------------------------------------------------

inline json to_json(const ScanContext& c) {
    return json{{"kmax_fraction", cfg_detail::arr3_json(c.kmax_fraction)},
                {"pf_fraction", cfg_detail::arr3_json(c.pf_fraction)},
                {"elliptical", c.elliptical},
                {"uniform_R", c.uniform_R},
                {"random_accel", c.random_accel},
                {"noise_add_ratio", c.noise_add_ratio},
                {"component", component_name(c.component)},
                {"normalize", c.normalize},
                {"warp", c.warp},
                {"pulse_dim", c.pulse_dim}};
}

inline ScanContext scan_context_from_json(const json& j) {
    ScanContext c;
    c.kmax_fraction = cfg_detail::arr3(j, "kmax_fraction", c.kmax_fraction);
    c.pf_fraction = cfg_detail::arr3(j, "pf_fraction", c.pf_fraction);
    c.elliptical = j.value("elliptical", false);
    c.uniform_R = j.value("uniform_R", 1.0);
    c.random_accel = j.value("random_accel", 1.0);
    c.noise_add_ratio = j.value("noise_add_ratio", 0.0);
    c.component = component_from_name(j.value("component", "magnitude"));
    c.normalize = j.value("normalize", false);
    c.warp = j.value("warp", false);
    c.pulse_dim = j.value("pulse_dim", 2);
    return c;
}

// --- training -----------------------------------------------------------------------

inline json to_json(const TrainConfig& t) {
    return json{{"epochs_stage1", t.epochs_stage1}, {"epochs_stage2", t.epochs_stage2},
                {"lr0", t.lr0},                     {"lr_decay", t.lr_decay},
                {"batch_size", t.batch_size},       {"seed", t.seed}};
}

inline TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    t.epochs_stage1 = j.value("epochs_stage1", t.epochs_stage1);
    t.epochs_stage2 = j.value("epochs_stage2", t.epochs_stage2);
    t.lr0 = j.value("lr0", t.lr0);
    t.lr_decay = j.value("lr_decay", t.lr_decay);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.seed = j.value("seed", t.seed);
    return t;
}

inline json to_json(const UNetSpec& s) {
    return json{{"depth", s.depth},
                {"base_channels", s.base_channels},
                {"in_channels", s.in_channels},
                {"pad", s.pad == nn::PadMode::periodic ? "periodic" : "zero"}};
}

inline UNetSpec unet_from_json(const json& j) {
    UNetSpec s;
    s.depth = j.value("depth", s.depth);
    s.base_channels = j.value("base_channels", s.base_channels);
    s.in_channels = j.value("in_channels", s.in_channels);
    s.pad = j.value("pad", "zero") == "periodic" ? nn::PadMode::periodic : nn::PadMode::zero;
    return s;
}

// --- config document --------------------------------------------------------------

// Default document: a three-ellipsoid phantom with smooth phase, an 8-coil ring,
// identity degradation, plain RSS recon.
inline json default_config() {
    PhantomSpec ph;
    ph.ellipsoids.push_back({{0.0, 0.0, 0.0}, {0.72, 0.85, 0.72}, {0, 0, 0}, 1.0});
    ph.ellipsoids.push_back({{0.2, 0.15, 0.0}, {0.25, 0.3, 0.35}, {0.4, 0, 0}, 0.6});
    ph.ellipsoids.push_back({{-0.3, -0.2, 0.1}, {0.15, 0.2, 0.2}, {0, 0.3, 0}, -0.4});
    ph.phase_poly = {0.2, 0.8, -0.5, 0.3, 0.2, 0.0, 0.0, -0.4, 0.3, 0.0};
    ph.edge_softening = 1.0;
    return json{
        {"dims", {32, 32, 32}},
        {"sigma0", 0.01},
        {"phantom", to_json(ph)},
        {"coils", to_json(CoilProfileSpec{})},
        {"degradation", to_json(DegradationPlan{})},
        {"recon", to_json(ReconPlan{})},
        {"scenario_distribution", json::object()},
        {"train", to_json(TrainConfig{})},
        {"eval", json::object()},
    };
}

inline json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    json user = json::parse(in, nullptr, true, true);  // allow comments
    json doc = default_config();
    doc.merge_patch(user);
    return doc;
}

// Apply a `--set a.b.c=value` override; the value is parsed as JSON when
// possible, otherwise taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("config: override must look like path.to.field=value");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ValidationError("config: empty key in override path " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

inline Shape3 dims_from_config(const json& doc) {
    const auto d = doc.at("dims").get<std::vector<std::size_t>>();
    if (d.size() != 3) throw ValidationError("config: dims must have 3 entries");
    return {d[0], d[1], d[2]};
}

}  // namespace mrtk

#include "ifl/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace ifl {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) fail(path, "unknown key '" + item.key() + "'");
    }
}

const json& require_object(const json& parent, const std::string& path,
                           const char* key) {
    if (!parent.contains(key)) fail(path + "." + key, "required section is missing");
    const json& v = parent.at(key);
    if (!v.is_object()) fail(path + "." + key, "expected an object");
    return v;
}

double require_number(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path + "." + key, "required number is missing");
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& path, const char* key,
                 double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

int require_int(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path + "." + key, "required integer is missing");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::uint64_t u64_or(const json& obj, const std::string& path, const char* key,
                     std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        fail(path + "." + key, "expected a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
        fail(path + "." + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::size_t size_or(const json& obj, const std::string& path, const char* key,
                    std::size_t fallback) {
    return static_cast<std::size_t>(u64_or(obj, path, key, fallback));
}

std::string require_string(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path + "." + key, "required string is missing");
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::string string_or(const json& obj, const std::string& path, const char* key,
                      const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

bool bool_or(const json& obj, const std::string& path, const char* key,
             bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
}

InitialCondition parse_u0(const json& obj, const std::string& path) {
    check_keys(obj, path, {"family", "radius", "level"});
    const std::string family = require_string(obj, path, "family");
    if (family == "constant_one") {
        if (obj.contains("radius") || obj.contains("level"))
            fail(path, "constant_one takes no radius or level");
        return InitialCondition::constant_one();
    }
    const double radius = number_or(obj, path, "radius", 1.0);
    const double level = number_or(obj, path, "level", 1.0);
    if (!(radius > 0.0)) fail(path + ".radius", "must be > 0");
    if (!(level > 0.0)) fail(path + ".level", "must be > 0");
    if (family == "indicator") return InitialCondition::indicator_ball(radius, level);
    if (family == "bump") return InitialCondition::bump(radius, level);
    fail(path + ".family",
         "unknown value '" + family + "' (expected indicator, bump, constant_one)");
}

ModelParams parse_model(const json& obj, const std::string& path) {
    check_keys(obj, path, {"d", "lambda", "p", "u0", "support_ratio"});
    ModelParams model;
    model.d = require_int(obj, path, "d");
    if (model.d < 1) fail(path + ".d", "must be >= 1");
    model.lambda = require_number(obj, path, "lambda");
    if (!(model.lambda >= 0.0)) fail(path + ".lambda", "must be >= 0");
    model.p = require_int(obj, path, "p");
    if (model.p < 2) fail(path + ".p", "must be an integer >= 2");
    if (obj.contains("u0")) {
        model.u0 = parse_u0(require_object(obj, path, "u0"), path + ".u0");
    }
    model.support_ratio = number_or(obj, path, "support_ratio", 1.0);
    if (!(model.support_ratio >= 1.0)) fail(path + ".support_ratio", "must be >= 1");
    return model;
}

TimeCovariance parse_gamma(const json& obj, const std::string& path) {
    const std::string family = require_string(obj, path, "family");
    if (family == "power_law") {
        check_keys(obj, path, {"family", "alpha"});
        const double alpha = require_number(obj, path, "alpha");
        if (!(alpha > 0.0 && alpha < 1.0)) fail(path + ".alpha", "must lie in (0, 1)");
        return TimeCovariance::power_law(alpha);
    }
    if (family == "constant") {
        check_keys(obj, path, {"family", "level"});
        const double level = number_or(obj, path, "level", 1.0);
        if (!(level > 0.0)) fail(path + ".level", "must be > 0");
        return TimeCovariance::constant(level);
    }
    if (family == "dirac") {
        check_keys(obj, path, {"family"});
        return TimeCovariance::dirac();
    }
    fail(path + ".family",
         "unknown value '" + family + "' (expected power_law, constant, dirac)");
}

SpaceCovariance parse_lambda_kernel(const json& obj, const std::string& path, int d) {
    const std::string family = require_string(obj, path, "family");
    if (family == "riesz") {
        check_keys(obj, path, {"family", "beta"});
        const double beta = require_number(obj, path, "beta");
        const double cap = std::min(2.0, static_cast<double>(d));
        if (!(beta > 0.0 && beta < cap))
            fail(path + ".beta", "must lie in (0, min(2, d))");
        return SpaceCovariance::riesz(d, beta);
    }
    if (family == "fractional") {
        check_keys(obj, path, {"family", "hurst"});
        if (!obj.contains("hurst") || !obj.at("hurst").is_array())
            fail(path + ".hurst", "expected an array of d Hurst indices");
        std::vector<double> hurst;
        for (const auto& h : obj.at("hurst")) {
            if (!h.is_number()) fail(path + ".hurst", "expected numbers");
            hurst.push_back(h.get<double>());
        }
        if (static_cast<int>(hurst.size()) != d)
            fail(path + ".hurst", "length must equal model.d");
        for (double h : hurst)
            if (!(h > 0.5 && h < 1.0)) fail(path + ".hurst", "entries must lie in (1/2, 1)");
        return SpaceCovariance::fractional(std::move(hurst));
    }
    if (family == "constant_level") {
        check_keys(obj, path, {"family", "level"});
        const double level = number_or(obj, path, "level", 1.0);
        if (!(level > 0.0)) fail(path + ".level", "must be > 0");
        return SpaceCovariance::constant_level(d, level);
    }
    if (family == "mollified_white") {
        check_keys(obj, path, {"family", "eps"});
        const double eps = require_number(obj, path, "eps");
        if (!(eps > 0.0)) fail(path + ".eps", "must be > 0");
        return SpaceCovariance::mollified_white(d, eps);
    }
    if (family == "white_1d") {
        check_keys(obj, path, {"family"});
        if (d != 1) fail(path + ".family", "white_1d requires model.d = 1");
        return SpaceCovariance::white_1d();
    }
    if (family == "lower_riesz_envelope") {
        check_keys(obj, path, {"family", "beta", "envelope"});
        const double beta = require_number(obj, path, "beta");
        const double cap = std::min(2.0, static_cast<double>(d));
        if (!(beta > 0.0 && beta < cap))
            fail(path + ".beta", "must lie in (0, min(2, d))");
        const json& env = require_object(obj, path, "envelope");
        check_keys(env, path + ".envelope", {"c", "r"});
        const double c = require_number(env, path + ".envelope", "c");
        const double r = require_number(env, path + ".envelope", "r");
        if (!(c > 0.0)) fail(path + ".envelope.c", "must be > 0");
        if (!(r > 0.0)) fail(path + ".envelope.r", "must be > 0");
        return SpaceCovariance::lower_riesz_envelope(d, beta, c, r);
    }
    fail(path + ".family", "unknown value '" + family +
                               "' (expected riesz, fractional, constant_level, "
                               "mollified_white, white_1d, lower_riesz_envelope)");
}

McParams parse_mc(const json& obj, const std::string& path) {
    check_keys(obj, path, {"n_rep", "n_steps", "seed", "mode", "clip", "clip_scale"});
    McParams mc;
    mc.n_rep = size_or(obj, path, "n_rep", mc.n_rep);
    if (mc.n_rep < 2) fail(path + ".n_rep", "must be >= 2");
    mc.n_steps = size_or(obj, path, "n_steps", mc.n_steps);
    if (mc.n_steps < 2) fail(path + ".n_steps", "must be >= 2");
    mc.seed = u64_or(obj, path, "seed", mc.seed);
    const std::string mode = string_or(obj, path, "mode", "conditioned");
    if (mode == "conditioned")
        mc.mode = MomentMode::EndpointConditioned;
    else if (mode == "direct")
        mc.mode = MomentMode::Direct;
    else
        fail(path + ".mode", "unknown value '" + mode + "' (expected conditioned, direct)");
    mc.quadrature.clip = bool_or(obj, path, "clip", true);
    mc.quadrature.clip_scale = number_or(obj, path, "clip_scale", 1.0);
    if (!(mc.quadrature.clip_scale > 0.0)) fail(path + ".clip_scale", "must be > 0");
    return mc;
}

FrontConfig parse_front(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"delta", "rho_min", "rho_max", "rho_steps", "t_grid", "scale"});
    FrontConfig front;
    front.delta = number_or(obj, path, "delta", front.delta);
    if (!(front.delta > 0.0 && front.delta < 1.0))
        fail(path + ".delta", "must lie in (0, 1)");
    front.rho_min = number_or(obj, path, "rho_min", front.rho_min);
    if (!(front.rho_min >= 0.0)) fail(path + ".rho_min", "must be >= 0");
    front.rho_max = number_or(obj, path, "rho_max", front.rho_max);
    front.rho_steps = size_or(obj, path, "rho_steps", front.rho_steps);
    if (front.rho_steps < 1) fail(path + ".rho_steps", "must be >= 1");
    if (front.rho_steps > 1 && !(front.rho_max > front.rho_min))
        fail(path + ".rho_max", "must be > rho_min when rho_steps > 1");
    if (obj.contains("t_grid")) {
        const json& grid = obj.at("t_grid");
        if (!grid.is_array() || grid.empty())
            fail(path + ".t_grid", "expected a non-empty array");
        front.t_grid.clear();
        for (const auto& v : grid) {
            if (!v.is_number()) fail(path + ".t_grid", "expected numbers");
            front.t_grid.push_back(v.get<double>());
        }
        for (std::size_t i = 0; i < front.t_grid.size(); ++i) {
            if (!(front.t_grid[i] > 0.0)) fail(path + ".t_grid", "entries must be > 0");
            if (i > 0 && !(front.t_grid[i] > front.t_grid[i - 1]))
                fail(path + ".t_grid", "must be strictly increasing");
        }
    }
    const std::string scale = string_or(obj, path, "scale", "vartheta");
    front.scale = parse_scale_kind(scale);
    return front;
}

OutputConfig parse_output(const json& obj, const std::string& path) {
    check_keys(obj, path, {"directory", "formats"});
    OutputConfig output;
    output.directory = string_or(obj, path, "directory", output.directory);
    if (output.directory.empty()) fail(path + ".directory", "must be non-empty");
    if (obj.contains("formats")) {
        const json& formats = obj.at("formats");
        if (!formats.is_array() || formats.empty())
            fail(path + ".formats", "expected a non-empty array");
        output.formats.clear();
        for (const auto& f : formats) {
            if (!f.is_string()) fail(path + ".formats", "expected strings");
            const std::string v = f.get<std::string>();
            if (v != "csv" && v != "json")
                fail(path + ".formats", "unknown format '" + v + "' (expected csv, json)");
            output.formats.push_back(v);
        }
    }
    return output;
}

} // namespace

ScaleKind parse_scale_kind(const std::string& name) {
    if (name == "theta") return ScaleKind::Theta;
    if (name == "eta") return ScaleKind::Eta;
    if (name == "vartheta") return ScaleKind::Vartheta;
    throw ConfigError("scale: unknown value '" + name +
                      "' (expected theta, eta, vartheta)");
}

void ExperimentConfig::validate_for_estimation() const {
    if (lambda_kernel.is_distribution())
        throw ConfigError(
            "lambda_kernel.family: white_1d has no pointwise evaluation; use "
            "mollified_white for moment or front estimation");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(doc, "config",
               {"model", "gamma", "lambda_kernel", "mc", "front", "output"});

    ExperimentConfig config;
    config.model = parse_model(require_object(doc, "config", "model"), "model");
    config.gamma = parse_gamma(require_object(doc, "config", "gamma"), "gamma");
    config.lambda_kernel = parse_lambda_kernel(
        require_object(doc, "config", "lambda_kernel"), "lambda_kernel",
        config.model.d);
    if (doc.contains("mc")) config.mc = parse_mc(doc.at("mc"), "mc");
    if (doc.contains("front")) config.front = parse_front(doc.at("front"), "front");
    if (doc.contains("output"))
        config.output = parse_output(doc.at("output"), "output");
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    json doc;
    json model;
    model["d"] = config.model.d;
    model["lambda"] = config.model.lambda;
    model["p"] = config.model.p;
    json u0;
    switch (config.model.u0.family()) {
        case InitialFamily::IndicatorBall:
            u0["family"] = "indicator";
            u0["radius"] = config.model.u0.support_radius();
            u0["level"] = config.model.u0.sup_norm();
            break;
        case InitialFamily::Bump:
            u0["family"] = "bump";
            u0["radius"] = config.model.u0.support_radius();
            u0["level"] = config.model.u0.sup_norm();
            break;
        case InitialFamily::ConstantOne:
            u0["family"] = "constant_one";
            break;
    }
    model["u0"] = std::move(u0);
    model["support_ratio"] = config.model.support_ratio;
    doc["model"] = std::move(model);

    json gamma;
    switch (config.gamma.family()) {
        case TimeKernelFamily::PowerLaw:
            gamma["family"] = "power_law";
            gamma["alpha"] = config.gamma.alpha();
            break;
        case TimeKernelFamily::Constant:
            gamma["family"] = "constant";
            gamma["level"] = config.gamma.level();
            break;
        case TimeKernelFamily::Dirac:
            gamma["family"] = "dirac";
            break;
    }
    doc["gamma"] = std::move(gamma);

    json kern;
    switch (config.lambda_kernel.family()) {
        case SpaceKernelFamily::Riesz:
            kern["family"] = "riesz";
            kern["beta"] = config.lambda_kernel.riesz_beta();
            break;
        case SpaceKernelFamily::Fractional:
            kern["family"] = "fractional";
            kern["hurst"] = config.lambda_kernel.hurst();
            break;
        case SpaceKernelFamily::ConstantLevel:
            kern["family"] = "constant_level";
            kern["level"] = config.lambda_kernel.level();
            break;
        case SpaceKernelFamily::MollifiedWhite:
            kern["family"] = "mollified_white";
            kern["eps"] = config.lambda_kernel.mollifier_eps();
            break;
        case SpaceKernelFamily::White1D:
            kern["family"] = "white_1d";
            break;
        case SpaceKernelFamily::LowerRieszEnvelope:
            kern["family"] = "lower_riesz_envelope";
            kern["beta"] = config.lambda_kernel.riesz_beta();
            kern["envelope"] = {{"c", config.lambda_kernel.envelope_constant()},
                                {"r", config.lambda_kernel.envelope_radius()}};
            break;
    }
    doc["lambda_kernel"] = std::move(kern);

    json mc;
    mc["n_rep"] = config.mc.n_rep;
    mc["n_steps"] = config.mc.n_steps;
    mc["seed"] = config.mc.seed;
    mc["mode"] =
        config.mc.mode == MomentMode::EndpointConditioned ? "conditioned" : "direct";
    mc["clip"] = config.mc.quadrature.clip;
    mc["clip_scale"] = config.mc.quadrature.clip_scale;
    doc["mc"] = std::move(mc);

    json front;
    front["delta"] = config.front.delta;
    front["rho_min"] = config.front.rho_min;
    front["rho_max"] = config.front.rho_max;
    front["rho_steps"] = config.front.rho_steps;
    front["t_grid"] = config.front.t_grid;
    front["scale"] = to_string(config.front.scale);
    doc["front"] = std::move(front);

    json output;
    output["directory"] = config.output.directory;
    output["formats"] = config.output.formats;
    doc["output"] = std::move(output);

    return doc.dump(2) + "\n";
}

std::vector<double> rho_grid(const FrontConfig& front) {
    std::vector<double> grid;
    grid.reserve(front.rho_steps);
    if (front.rho_steps == 1) {
        grid.push_back(front.rho_min);
        return grid;
    }
    const double step =
        (front.rho_max - front.rho_min) / static_cast<double>(front.rho_steps - 1);
    for (std::size_t i = 0; i < front.rho_steps; ++i)
        grid.push_back(front.rho_min + static_cast<double>(i) * step);
    grid.back() = front.rho_max;
    return grid;
}

} // namespace ifl

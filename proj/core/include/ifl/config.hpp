#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ifl/feynman_kac.hpp"
#include "ifl/front_lab.hpp"
#include "ifl/kernels.hpp"
#include "ifl/model.hpp"

namespace ifl {

struct FrontConfig {
    double delta = 0.5;
    double rho_min = 0.01;
    double rho_max = 1.0;
    std::size_t rho_steps = 5;
    std::vector<double> t_grid = {1.0, 2.0, 4.0};
    ScaleKind scale = ScaleKind::Vartheta;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

// One JSON document drives every experiment. Parsing validates each domain
// constraint up front and rejects unknown keys; error messages name the
// offending key and the violated constraint.
struct ExperimentConfig {
    ModelParams model;
    TimeCovariance gamma = TimeCovariance::constant(1.0);
    SpaceCovariance lambda_kernel = SpaceCovariance::riesz(1, 0.5);
    McParams mc;
    FrontConfig front;
    OutputConfig output;

    // Estimation endpoints cannot evaluate distribution-valued kernels;
    // closed-form bounds can.
    void validate_for_estimation() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization: stable key order and materialized defaults, so
// load -> serialize -> load is the identity.
std::string serialize_config(const ExperimentConfig& config);

// Materializes the front rho grid (inclusive linspace).
std::vector<double> rho_grid(const FrontConfig& front);

ScaleKind parse_scale_kind(const std::string& name);

} // namespace ifl

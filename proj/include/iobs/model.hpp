#pragma once

// Nonlinear discrete-time plant
//
//     x[k+1] = A x[k] + p(x[k]) + w[k],   y[k] = C x[k],
//
// with Jacobian bounds D_lo <= dp/dx <= D_hi and disturbance bounds
// w_lo <= w[k] <= w_hi.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace iobs {

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Reference into the built-in nonlinearity registry.
struct NonlinearitySpec {
    std::string name = "zero";
    std::vector<double> params;
};

// Registry entries:
//   zero                 p(x) = 0
//   pendulum_sin [h, j]  p(x) = h [0; -sin(x_j)]   (n = 2, j in {1, 2}, default j = 1)
//   coupled_sin  [B]     p_i(x) = sum_j B_ij sin(x_j)   (B row-major n x n)
//   affine_saturation [B, c]   p(x) = B sat(x) + c, sat clips to [-1, 1]
[[nodiscard]] VectorMap make_nonlinearity(const NonlinearitySpec& spec, Eigen::Index n);
[[nodiscard]] std::vector<std::string> registered_nonlinearities();

struct Region {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

class SystemModel {
public:
    SystemModel() = default;

    // Validates every invariant; throws ModelError / DimensionError.
    SystemModel(Eigen::MatrixXd A, Eigen::MatrixXd C, NonlinearitySpec nonlinearity, Eigen::MatrixXd D_lo,
                Eigen::MatrixXd D_hi, Eigen::VectorXd w_lo, Eigen::VectorXd w_hi,
                std::optional<Region> region = std::nullopt);

    // Same, with an arbitrary callable in place of a registry entry. The
    // nonlinearity's name is recorded as "custom".
    static SystemModel with_callable(Eigen::MatrixXd A, Eigen::MatrixXd C, VectorMap p, Eigen::MatrixXd D_lo,
                                     Eigen::MatrixXd D_hi, Eigen::VectorXd w_lo, Eigen::VectorXd w_hi);

    [[nodiscard]] Eigen::Index n() const { return A_.rows(); }
    [[nodiscard]] Eigen::Index m() const { return C_.rows(); }
    [[nodiscard]] const Eigen::MatrixXd& A() const { return A_; }
    [[nodiscard]] const Eigen::MatrixXd& C() const { return C_; }
    [[nodiscard]] const Eigen::MatrixXd& D_lo() const { return D_lo_; }
    [[nodiscard]] const Eigen::MatrixXd& D_hi() const { return D_hi_; }
    [[nodiscard]] const Eigen::VectorXd& w_lo() const { return w_lo_; }
    [[nodiscard]] const Eigen::VectorXd& w_hi() const { return w_hi_; }
    [[nodiscard]] const NonlinearitySpec& nonlinearity() const { return spec_; }
    [[nodiscard]] bool has_registry_nonlinearity() const { return spec_.name != "custom"; }

    // Sampling region; the box [-pi, pi]^n unless declared.
    [[nodiscard]] Region region() const;
    [[nodiscard]] bool has_declared_region() const { return region_.has_value(); }

    [[nodiscard]] Eigen::VectorXd p(const Eigen::VectorXd& x) const { return p_(x); }
    [[nodiscard]] Eigen::VectorXd output(const Eigen::VectorXd& x) const { return C_ * x; }
    // Plant update for a given disturbance.
    [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
        return A_ * x + p_(x) + w;
    }

    // Copy with different disturbance bounds (validated).
    [[nodiscard]] SystemModel with_disturbance(Eigen::VectorXd w_lo, Eigen::VectorXd w_hi) const;

    // Optional transformation data carried by model files (Lambda, S).
    std::optional<Eigen::MatrixXd> lambda_hint;
    std::optional<Eigen::MatrixXd> s_hint;

private:
    void validate() const;

    Eigen::MatrixXd A_, C_, D_lo_, D_hi_;
    Eigen::VectorXd w_lo_, w_hi_;
    NonlinearitySpec spec_;
    VectorMap p_;
    std::optional<Region> region_;
};

[[nodiscard]] SystemModel model_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json model_to_json(const SystemModel& model);
[[nodiscard]] SystemModel load_model(const std::string& path);
void save_model(const SystemModel& model, const std::string& path);

struct JacobianViolation {
    Eigen::VectorXd x;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct JacobianReport {
    std::size_t samples = 0;
    std::vector<JacobianViolation> violations;
    [[nodiscard]] bool ok() const { return violations.empty(); }
};

// Central finite-difference Jacobian, step 1e-6 (1 + |x_j|) per coordinate.
[[nodiscard]] Eigen::MatrixXd finite_difference_jacobian(const VectorMap& f, const Eigen::VectorXd& x);

// Sample the model's region uniformly (seeded) and compare the
// finite-difference Jacobian with [D_lo, D_hi] + tol.
[[nodiscard]] JacobianReport check_jacobian_bounds(const SystemModel& model, std::size_t sample_count,
                                                   std::optional<Region> region = std::nullopt,
                                                   double tol = 1e-6, std::uint64_t seed = 1);

} // namespace iobs

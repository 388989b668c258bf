#pragma once

#include <Eigen/Dense>

#include <variant>

namespace iobs {

class SystemModel;

// Observer in the plant's coordinates: linear gain L, injection gain K and
// coupling matrices F, G >= 0.
struct DirectObserverGains {
    Eigen::MatrixXd L;
    Eigen::MatrixXd K;
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
};

// Observer in coordinates z = S x, U = S^{-1}: gains Lambda, H and coupling
// matrices Phi, Gamma >= 0.
struct TransformedObserverGains {
    Eigen::MatrixXd Lambda;
    Eigen::MatrixXd S;
    Eigen::MatrixXd U;
    Eigen::MatrixXd H;
    Eigen::MatrixXd Phi;
    Eigen::MatrixXd Gamma;
};

using ObserverGains = std::variant<DirectObserverGains, TransformedObserverGains>;

// Dimension checks against a model (throws DimensionError) and the
// nonnegativity / inverse invariants (throws Error).
void validate_gains(const ObserverGains& gains, const SystemModel& model, double tol = 1e-9);

} // namespace iobs

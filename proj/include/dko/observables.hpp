#pragma once

#include "dko/measures.hpp"

#include <Eigen/Dense>
#include "json.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dko {

// Scalar function on one-dimensional states.
struct StateObservable {
    enum class Kind { indicator_bin, gaussian, monomial, custom };

    Kind kind = Kind::monomial;
    std::size_t index = 1;  // indicator_bin: bin i of n, 1-based
    std::size_t bins = 1;
    double center = 0.0;  // gaussian
    double width = 1.0;
    int degree = 0;    // monomial
    std::string name;  // custom: "cos<k>" or "sin<k>"
    int frequency = 0;

    // Indicator of [2*pi*(i-1)/n, 2*pi*i/n) on the circle.
    static StateObservable indicator(std::size_t i, std::size_t n);
    // exp(-(x - c)^2 / (2 width^2))
    static StateObservable gaussian(double center, double width = 1.0);
    static StateObservable monomial(int degree);
    // Registered named functions: cos<k>, sin<k> for integer k >= 0.
    static StateObservable custom(const std::string& name);

    double operator()(double x) const;
    std::string label() const;
};

// Functional on measures: a linear lift h(pi) = E_pi[f], or one of the
// quadratic products p_ij(pi) = E_pi[f_i f_j], q_ij(pi) = E_pi[f_i] E_pi[f_j].
struct DistObservable {
    enum class Kind { linear, product_p, product_q };

    Kind kind = Kind::linear;
    std::size_t first = 0;   // index into the bank's base observables
    std::size_t second = 0;  // product kinds only
};

// Ordered family of distribution observables over a shared list of base
// state observables. The order is the index contract of every matrix built
// from the bank.
class ObservableBank {
public:
    ObservableBank(std::vector<StateObservable> base, std::vector<DistObservable> observables,
                   std::vector<std::string> labels);

    std::size_t size() const noexcept { return observables_.size(); }
    const std::vector<StateObservable>& base() const noexcept { return base_; }
    const std::vector<DistObservable>& observables() const noexcept { return observables_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    // True when every member is a linear lift.
    bool is_linear() const noexcept;

    // Values of all observables on one measure (length size()).
    Eigen::VectorXd evaluate(const EmpiricalMeasure& mu) const;
    // Base state observables at one state, i.e. the linear bank on a Dirac.
    Eigen::VectorXd evaluate_state(double x) const;

    nlohmann::json descriptor() const;
    static ObservableBank from_descriptor(const nlohmann::json& j);

private:
    std::vector<StateObservable> base_;
    std::vector<DistObservable> observables_;
    std::vector<std::string> labels_;
};

// Linear bank over arbitrary state observables.
ObservableBank linear_bank(std::vector<StateObservable> base);
ObservableBank indicator_bank(std::size_t n);
ObservableBank gaussian_bank(std::span<const double> centers);
ObservableBank monomial_bank(int max_degree);
// All p_ij then all q_ij, pairs (i <= j) in lexicographic order.
ObservableBank pq_bank(std::span<const double> centers);
// n equally spaced centers on [lo, hi].
std::vector<double> equispaced(double lo, double hi, std::size_t n);

// Index (0-based) of pair (i, j), i <= j, in the lexicographic enumeration.
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n_centers);

// Coefficients w with <w, pq_bank(pi)> = Var_pi(h_i); i is 1-based.
Eigen::VectorXd variance_coeff(std::size_t i, std::size_t n_centers);

// (i, j) entry = h_i(pi_j).
Eigen::MatrixXd evaluate_bank(const ObservableBank& bank, std::span<const EmpiricalMeasure> measures);

}  // namespace dko
